use thiserror::Error;

use crate::tabulated::RationalInterpolant;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency {omega} cm^-1 is outside the domain of the spectral density")]
    Domain { omega: f64 },

    #[error("quantum noise spectral density is integrably singular at omega = {omega} cm^-1")]
    Singular { omega: f64 },

    #[error(
        "quadrature did not converge at t = {time_fs} fs: estimated error {achieved:e}, requested {requested:e}"
    )]
    QuadratureDiverged {
        time_fs: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("AAA fit reached max degree with relative error {achieved:e} (requested {requested:e})")]
    AaaNotConverged {
        best: Box<RationalInterpolant>,
        achieved: f64,
        requested: f64,
    },

    #[error("NNLS exceeded {iterations} iterations (KKT residual {kkt_residual:e})")]
    NnlsIterationCap {
        best: Vec<f64>,
        kkt_residual: f64,
        iterations: usize,
    },

    #[error("recurrence coefficient eta_{index} = {value:e} is not positive; the weight is numerically rank deficient")]
    NonPositiveRecurrence { index: usize, value: f64 },

    #[error("symmetric tridiagonal eigensolver failed to converge")]
    EigenFailure,

    #[error("degenerate fit: every NNLS weight is zero")]
    DegenerateFit,

    #[error("weight is unbounded at omega = 0 inside [{lo}, {hi}] cm^-1; choose an interval with omega_min > 0 or omega_max < 0")]
    SingularWeight { lo: f64, hi: f64 },

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("root finding failed: {0}")]
    RootFind(String),

    #[error("malformed table: {0}")]
    Table(String),
}
