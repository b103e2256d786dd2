//! Dispatch from a validated [`RunConfig`] to the discretizers and the oracle.

use std::sync::Arc;

use bathmodes::{
    aaa_fit, bcf_from_modes, bcf_reference, chain_map, compare, discretize_bsdo, discretize_id, discretize_ld,
    discretize_mdm, smooth_table, smooth_table_gcv, time_grid, BcfSeries, ChainCoefficients, DiscreteBath,
    ErrorReport, IdOptions, Method, Qnsd, SdTable, SpectralDensity, Temperature,
};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig, SdSource, Smoothing};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Numerical { context: String, source: bathmodes::Error },
    #[error("cannot write {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

impl RunError {
    fn numerical(context: impl Into<String>) -> impl FnOnce(bathmodes::Error) -> Self {
        let context = context.into();
        move |source| Self::Numerical { context, source }
    }

    /// 2 for configuration problems, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical { .. } => 3,
            Self::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, RunError>;

/// The QNSD of a run plus whatever the tabulated pipeline had to report.
#[derive(Debug, Clone)]
pub struct PreparedSd {
    pub qnsd: Qnsd,
    pub warnings: Vec<String>,
    pub smoothing_lambda: Option<f64>,
    pub aaa_degree: Option<usize>,
}

pub fn temperature(cfg: &RunConfig) -> Result<Temperature> {
    Temperature::kelvin(cfg.temperature_k).map_err(|e| {
        ConfigError::Invalid { key: "temperature_k".into(), message: e.to_string() }.into()
    })
}

/// Smooth, fit and floor a table into a spectral density.
pub fn tabulated_sd(
    table: &SdTable,
    smoothing: &Smoothing,
    aaa_tolerance: f64,
    aaa_max_degree: usize,
    omega_floor: f64,
) -> Result<(SpectralDensity, Vec<String>, Option<f64>, usize)> {
    let mut warnings = Vec::new();
    let (smoothed, lambda) = match smoothing {
        Smoothing::None => (table.clone(), None),
        Smoothing::Gcv => {
            let (t, l) = smooth_table_gcv(table).map_err(RunError::numerical("smoothing"))?;
            (t, Some(l))
        }
        Smoothing::Lambda(l) => (smooth_table(table, *l).map_err(RunError::numerical("smoothing"))?, Some(*l)),
    };
    let fit = match aaa_fit(&smoothed, aaa_tolerance, aaa_max_degree) {
        Ok(f) => f,
        Err(bathmodes::Error::AaaNotConverged { best, achieved, requested }) => {
            warnings.push(format!(
                "AAA fit stopped at degree {} with relative error {achieved:e} (requested {requested:e}); using best fit",
                best.degree()
            ));
            *best
        }
        Err(e) => return Err(RunError::numerical("AAA fit")(e)),
    };
    let degree = fit.degree();
    let sd = SpectralDensity::tabulated(Arc::new(fit), omega_floor).map_err(RunError::numerical("spectral density"))?;
    Ok((sd, warnings, lambda, degree))
}

pub fn prepare_sd(cfg: &RunConfig) -> Result<PreparedSd> {
    let t = temperature(cfg)?;
    match &cfg.source {
        SdSource::PowerLaw { exponent_s, coupling_alpha, cutoff_frequency_cm1 } => {
            let sd = SpectralDensity::power_law(*exponent_s, *coupling_alpha, *cutoff_frequency_cm1).map_err(|e| {
                ConfigError::Invalid { key: "exponent_s/coupling_alpha/cutoff_frequency_cm1".into(), message: e.to_string() }
            })?;
            Ok(PreparedSd { qnsd: Qnsd::new(sd, t), warnings: Vec::new(), smoothing_lambda: None, aaa_degree: None })
        }
        SdSource::Tabulated { file, smoothing, aaa_tolerance, aaa_max_degree, omega_floor_cm1 } => {
            let table = SdTable::read(file)
                .map_err(|e| ConfigError::Invalid { key: "tabulated_file".into(), message: format!("{}: {e}", file.display()) })?;
            let (sd, warnings, lambda, degree) = tabulated_sd(&table, smoothing, *aaa_tolerance, *aaa_max_degree, *omega_floor_cm1)?;
            Ok(PreparedSd { qnsd: Qnsd::new(sd, t), warnings, smoothing_lambda: lambda, aaa_degree: Some(degree) })
        }
    }
}

/// One discretization to perform: a method, and for BSDO its interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub method: Method,
    pub interval: Option<[f64; 2]>,
}

impl Job {
    /// Display label, e.g. `bsdo[-250,250]`.
    pub fn label(&self) -> String {
        match self.interval {
            Some([a, b]) => format!("{}[{a},{b}]", self.method.label()),
            None => self.method.label().to_string(),
        }
    }

    /// File-name friendly label, e.g. `bsdo_-250_250`.
    pub fn slug(&self) -> String {
        match self.interval {
            Some([a, b]) => format!("{}_{a}_{b}", self.method.label()),
            None => self.method.label().to_string(),
        }
    }
}

pub fn jobs(cfg: &RunConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for &method in &cfg.methods {
        if method == Method::Bsdo {
            out.extend(cfg.bsdo_intervals.iter().map(|&iv| Job { method, interval: Some(iv) }));
        } else {
            out.push(Job { method, interval: None });
        }
    }
    out
}

pub fn run_job(q: &Qnsd, cfg: &RunConfig, job: &Job) -> bathmodes::Result<DiscreteBath> {
    match job.method {
        Method::Id => {
            let opts = IdOptions { mode: cfg.id_mode, quadrature: cfg.quadrature, oracle_tolerance: cfg.oracle_tolerance };
            discretize_id(q, &cfg.grid, &opts)
        }
        Method::Ld => {
            let omega_max = cfg.grid.omega_lo.abs().max(cfg.grid.omega_hi.abs());
            discretize_ld(q, omega_max, cfg.ld_modes, cfg.ld_ratio)
        }
        Method::Mdm => discretize_mdm(q, cfg.mdm_modes),
        Method::Bsdo => {
            let [lo, hi] = job.interval.unwrap_or([cfg.grid.omega_lo, cfg.grid.omega_hi]);
            discretize_bsdo(q, lo, hi, cfg.bsdo_modes)
        }
    }
}

fn with_warnings(mut bath: DiscreteBath, warnings: &[String]) -> DiscreteBath {
    bath.provenance.warnings.extend(warnings.iter().cloned());
    bath
}

/// Every configured discretization; the first failure aborts.
pub fn run_discretize(cfg: &RunConfig) -> Result<Vec<(Job, DiscreteBath)>> {
    let sd = prepare_sd(cfg)?;
    jobs(cfg)
        .into_iter()
        .map(|job| {
            let bath = run_job(&sd.qnsd, cfg, &job).map_err(RunError::numerical(job.label()))?;
            Ok((job, with_warnings(bath, &sd.warnings)))
        })
        .collect()
}

pub fn verification_times(cfg: &RunConfig) -> Vec<f64> {
    time_grid(cfg.verification_time_fs, cfg.verification_points)
}

/// Oracle BCF on the verification grid over the reference window.
pub fn run_bcf(cfg: &RunConfig) -> Result<BcfSeries> {
    let sd = prepare_sd(cfg)?;
    reference(&sd.qnsd, cfg)
}

fn reference(q: &Qnsd, cfg: &RunConfig) -> Result<BcfSeries> {
    let [lo, hi] = cfg.reference_window;
    bcf_reference(q, lo, hi, &verification_times(cfg), cfg.oracle_tolerance).map_err(RunError::numerical("reference BCF"))
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub bath: DiscreteBath,
    pub series: BcfSeries,
    pub report: ErrorReport,
    /// |sum g^2 - C(0)| / |C(0)|.
    pub weight_mismatch: f64,
}

#[derive(Debug, Clone)]
pub struct MethodResult {
    pub job: Job,
    pub outcome: std::result::Result<MethodOutcome, String>,
}

/// Reference and per-method results on one shared time grid.
#[derive(Debug, Clone)]
pub struct ComparisonBundle {
    pub reference: BcfSeries,
    pub results: Vec<MethodResult>,
    pub warnings: Vec<String>,
}

fn evaluate(q: &Qnsd, cfg: &RunConfig, job: &Job, reference: &BcfSeries) -> bathmodes::Result<MethodOutcome> {
    let bath = run_job(q, cfg, job)?;
    let series = bcf_from_modes(&bath, reference.times())?;
    let report = compare(&series, reference, &job.label())?;
    let c0 = reference.values()[0];
    let weight_mismatch = (bath.total_weight() - c0.re).abs() / c0.norm();
    Ok(MethodOutcome { bath, series, report, weight_mismatch })
}

/// Runs every configured method against the oracle. A failing method is
/// recorded and the others still run; only a failing reference aborts.
pub fn run_compare(cfg: &RunConfig) -> Result<ComparisonBundle> {
    if cfg.methods.is_empty() {
        return Err(ConfigError::Invalid { key: "method".into(), message: "method list is empty".into() }.into());
    }
    let sd = prepare_sd(cfg)?;
    let reference = reference(&sd.qnsd, cfg)?;
    let results = jobs(cfg)
        .into_iter()
        .map(|job| {
            let outcome = evaluate(&sd.qnsd, cfg, &job, &reference)
                .map(|mut o| {
                    o.bath = with_warnings(o.bath, &sd.warnings);
                    o
                })
                .map_err(|e| e.to_string());
            MethodResult { job, outcome }
        })
        .collect();
    Ok(ComparisonBundle { reference, results, warnings: sd.warnings })
}

/// Chain coefficients for each configured BSDO interval.
pub fn run_chain(cfg: &RunConfig) -> Result<Vec<([f64; 2], ChainCoefficients)>> {
    let sd = prepare_sd(cfg)?;
    cfg.bsdo_intervals
        .iter()
        .map(|&[lo, hi]| {
            let c = chain_map(&sd.qnsd, lo, hi, cfg.bsdo_modes).map_err(RunError::numerical(format!("chain [{lo}, {hi}]")))?;
            Ok(([lo, hi], c))
        })
        .collect()
}
