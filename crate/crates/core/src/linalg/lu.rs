use rayon::prelude::*;

use super::matrix::{Matrix, Scalar};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T: Scalar> {
    n: usize,
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: f64,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!("LU of a {}x{} matrix", a.rows(), a.cols())));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = a.max_abs();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 || !pmax.is_finite() || pmax <= scale * 1e-300 {
                return Err(Error::Singular(format!("zero pivot in column {k} of {n}")));
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Lu { n, lu, perm, sign })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n, "LU solve shape mismatch");
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in 0..i {
                if !row[j].is_zero() {
                    s -= row[j] * x[j];
                }
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in i + 1..n {
                if !row[j].is_zero() {
                    s -= row[j] * x[j];
                }
            }
            x[i] = s / row[i];
        }
        b.copy_from_slice(&x);
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves column by column.
    pub fn solve_matrix(&self, b: &Matrix<T>) -> Matrix<T> {
        assert_eq!(b.rows(), self.n);
        let cols: Vec<Vec<T>> = (0..b.cols()).into_par_iter().map(|j| self.solve(&b.column(j))).collect();
        Matrix::from_fn(self.n, b.cols(), |i, j| cols[j][i])
    }

    pub fn inverse(&self) -> Matrix<T> {
        self.solve_matrix(&Matrix::identity(self.n))
    }

    pub fn det(&self) -> T {
        let mut d = T::from_f64(self.sign);
        for i in 0..self.n {
            d *= self.lu[(i, i)];
        }
        d
    }
}

/// `I_L ⊗ D - E ⊗ S`: block lower bidiagonal with identical diagonal blocks `D` and
/// subdiagonal blocks `-S` (or block diagonal when `coupling` is `None`).
///
/// Solves run by block forward substitution, so a right-hand side that vanishes on
/// the leading time blocks gives a solution that vanishes there exactly.
#[derive(Debug, Clone)]
pub struct BlockBidiagonal<T: Scalar> {
    blocks: usize,
    diag: Matrix<T>,
    diag_lu: Lu<T>,
    coupling: Option<Matrix<T>>,
}

impl<T: Scalar> BlockBidiagonal<T> {
    pub fn new(blocks: usize, diag: Matrix<T>, coupling: Option<Matrix<T>>) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::Dimension("zero blocks".into()));
        }
        if let Some(s) = &coupling {
            if s.rows() != diag.rows() || s.cols() != diag.cols() {
                return Err(Error::Dimension("coupling block shape differs from diagonal block".into()));
            }
        }
        let diag_lu = Lu::factor(&diag)?;
        Ok(BlockBidiagonal { blocks, diag, diag_lu, coupling })
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_dim(&self) -> usize {
        self.diag.rows()
    }

    pub fn dim(&self) -> usize {
        self.blocks * self.block_dim()
    }

    pub fn diag_block(&self) -> &Matrix<T> {
        &self.diag
    }

    pub fn coupling(&self) -> Option<&Matrix<T>> {
        self.coupling.as_ref()
    }

    pub fn materialize(&self) -> Matrix<T> {
        let b = self.block_dim();
        let mut out = Matrix::zeros(self.dim(), self.dim());
        for l in 0..self.blocks {
            out.set_block(l * b, l * b, &self.diag);
            if let (Some(s), true) = (&self.coupling, l > 0) {
                out.set_block(l * b, (l - 1) * b, &s.scale(-T::one()));
            }
        }
        out
    }

    pub fn solve_in_place(&self, y: &mut [T]) {
        assert_eq!(y.len(), self.dim(), "block solve shape mismatch");
        let b = self.block_dim();
        for l in 0..self.blocks {
            let (done, rest) = y.split_at_mut(l * b);
            let cur = &mut rest[..b];
            if let (Some(s), true) = (&self.coupling, l > 0) {
                let prev = &done[(l - 1) * b..];
                if prev.iter().any(|x| !x.is_zero()) {
                    let sx = s.matvec(prev);
                    for (c, v) in cur.iter_mut().zip(sx) {
                        *c += v;
                    }
                }
            }
            if cur.iter().any(|x| !x.is_zero()) {
                self.diag_lu.solve_in_place(cur);
            }
        }
    }

    pub fn solve(&self, y: &[T]) -> Vec<T> {
        let mut x = y.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_matrix(&self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(rhs.rows(), self.dim());
        let cols: Vec<Vec<T>> = (0..rhs.cols()).into_par_iter().map(|j| self.solve(&rhs.column(j))).collect();
        Matrix::from_fn(self.dim(), rhs.cols(), |i, j| cols[j][i])
    }
}
