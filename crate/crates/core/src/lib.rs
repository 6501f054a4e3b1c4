//! Matrix-form PFASST for periodic linear model problems, block Fourier analysis of
//! its iteration matrix, and convergence prediction.

pub mod error;
pub mod linalg;

pub use error::{Error, Result};
pub mod collocation;
pub mod quadrature;
pub mod solvers;
pub mod space;
pub mod transfer;
pub mod lfa;
pub mod analysis;
pub mod verify;
