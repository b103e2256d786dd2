//! Discretization of bosonic bath spectral densities into a small set of
//! modes whose correlation function matches the continuum one on a time window.
//!
//! The main entry point is [`discretize_id`]: an interpolative decomposition of
//! the sampled integrand selects frequencies, and nonnegative least squares
//! against a quadrature reference fixes the couplings. Logarithmic, mode-density
//! and orthogonal-polynomial (BSDO) discretizations are provided for comparison.

pub mod bcf;
pub mod discretize;
pub mod error;
pub mod linalg;
pub mod quad;
pub mod sd;
pub mod tabulated;
pub mod units;

pub use bcf::{bcf_from_modes, bcf_from_modes_at, bcf_reference, bcf_values, compare, time_grid, BcfSeries, ErrorReport, OracleOptions, ORACLE_TOLERANCE};
pub use discretize::{
    chain_map, discretize_bsdo, discretize_id, discretize_ld, discretize_mdm, ChainCoefficients, DiscreteBath,
    DiscretizationGrid, IdOptions, Method, Mode, Provenance, QuadratureRule,
};
pub use error::{Error, Result};
pub use linalg::{id_decompose, nnls, IdFactorization, IdMode, JacobiMatrix, NnlsSolution, RealMatrix};
pub use sd::{PowerLaw, Qnsd, SdInterpolant, SpectralDensity, Temperature};
pub use tabulated::{aaa_fit, smooth_table, smooth_table_gcv, RationalInterpolant, SdTable};
pub use units::{beta_from_kelvin, kappa, PhysicalConstants, CONSTANTS};
