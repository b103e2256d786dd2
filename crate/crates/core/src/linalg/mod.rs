//! Column-selecting interpolative decomposition, nonnegative least squares,
//! and orthogonal-polynomial quadrature generation.

mod id;
mod jacobi;
mod matrix;
mod nnls;

pub use id::{id_decompose, IdFactorization, IdMode};
pub use jacobi::{golub_welsch, stieltjes_jacobi, stieltjes_jacobi_weight, GaussRule, JacobiMatrix};
pub use matrix::RealMatrix;
pub use nnls::{kkt_residual, nnls, NnlsSolution};

