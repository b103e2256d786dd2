//! Command-line front end for `bathmodes`: run configuration, dispatch and
//! artifact emission.

pub mod config;
pub mod output;
pub mod run;

pub use config::{load_config, ConfigError, RunConfig, SdSource, Smoothing};
pub use run::{run_bcf, run_chain, run_compare, run_discretize, ComparisonBundle, Job, MethodResult, RunError};
