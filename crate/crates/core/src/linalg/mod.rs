//! Dense real and complex linear algebra.

mod eigen;
mod lu;
mod matrix;
mod symmetric;

pub use eigen::{eigenvalues, hessenberg_qr, hessenberg_reduce, sort_desc, strongly_connected_components, Spectrum};
pub use lu::{BlockBidiagonal, Lu};
pub use matrix::{
    add_vec, axpy, dft_matrix, kron, max_abs_diff, norm2, norm_inf, root_of_unity, sub_vec, CMatrix, Matrix,
    RMatrix, Scalar, C64, MAX_ENTRIES,
};
pub use symmetric::{
    hermitian_max_eigenvalue, hermitian_tridiagonalize, spectral_norm, tridiagonal_eigenvalue,
    tridiagonal_eigenvalues,
};
