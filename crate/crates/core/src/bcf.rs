//! Bath correlation functions: quadrature reference, reconstruction from
//! discrete modes, and normalized error reports.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{DiscreteBath, Mode};
use crate::error::{Error, Result};
use crate::quad::{integrate, AdaptiveOptions};
use crate::sd::Qnsd;
use crate::units::kappa;

/// Default relative tolerance of reference quadrature.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

/// C(t) sampled on an ascending time grid starting at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcfSeries {
    times: Vec<f64>,
    values: Vec<Complex64>,
    normalization: f64,
}

impl BcfSeries {
    pub fn new(times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::GridMismatch("times must ascend strictly from 0".into()));
        }
        let normalization = values[0].norm();
        if !(normalization > 0.0) {
            return Err(Error::InvalidParameter("|C(0)| must be positive".into()));
        }
        Ok(Self { times, values, normalization })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// |C(0)|.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }
}

/// Pointwise |C_approx(t) - C(t)| / |C(0)| and its summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub method: String,
    pub errors: Vec<f64>,
    pub max_error: f64,
    pub mean_error: f64,
}

impl ErrorReport {
    /// Largest normalized error over times t <= t_max.
    pub fn max_error_until(&self, times: &[f64], t_max: f64) -> f64 {
        self.errors
            .iter()
            .zip(times)
            .filter(|(_, &t)| t <= t_max)
            .map(|(e, _)| *e)
            .fold(0.0, f64::max)
    }
}

/// `n` equispaced times on [0, t_max].
pub fn time_grid(t_max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub tolerance: f64,
    /// Additional split points, on top of the density's own breakpoints.
    pub extra_breakpoints: Vec<f64>,
    pub max_panels: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { tolerance: ORACLE_TOLERANCE, extra_breakpoints: Vec::new(), max_panels: 20_000 }
    }
}

/// C(t) = integral of S_beta(w) exp(-i kappa w t) over [lo, hi] at each time.
///
/// Time points are integrated independently (in parallel) and each uses a
/// fixed subdivision order, so results do not depend on the thread count.
pub fn bcf_values(q: &Qnsd, lo: f64, hi: f64, times: &[f64], opts: &OracleOptions) -> Result<Vec<Complex64>> {
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty frequency window [{lo}, {hi}]")));
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::InvalidParameter("oracle tolerance must be positive".into()));
    }
    let mut breakpoints = q.breakpoints(lo, hi);
    breakpoints.extend(opts.extra_breakpoints.iter().copied().filter(|&p| p > lo && p < hi));
    let singular_points = if lo <= 0.0 && hi >= 0.0 { vec![0.0] } else { Vec::new() };
    let base = AdaptiveOptions {
        rel_tol: opts.tolerance,
        abs_tol: 0.0,
        max_width: None,
        breakpoints,
        singular_points,
        max_panels: opts.max_panels,
    };

    let weight = {
        let f = |w: f64| Complex64::new(q.density(w), 0.0);
        integrate(&f, lo, hi, &base).abs_value
    };
    let k = kappa();

    let results: Vec<_> = times
        .par_iter()
        .map(|&t| {
            let phase = k * t;
            let f = |w: f64| {
                let s = q.density(w);
                let (sin, cos) = (phase * w).sin_cos();
                Complex64::new(s * cos, -s * sin)
            };
            let mut o = base.clone();
            o.abs_tol = opts.tolerance * 1e-4 * weight;
            if phase.abs() > 0.0 {
                o.max_width = Some(std::f64::consts::PI / phase.abs());
            }
            let r = integrate(&f, lo, hi, &o);
            let target = (o.rel_tol * r.value.norm()).max(o.abs_tol);
            (t, r, target)
        })
        .collect();

    let worst = results
        .iter()
        .filter(|(_, r, _)| !r.converged)
        .max_by(|a, b| (a.1.error / a.2).total_cmp(&(b.1.error / b.2)));
    if let Some((t, r, target)) = worst {
        return Err(Error::QuadratureDiverged { time_fs: *t, achieved: r.error, requested: *target });
    }
    Ok(results.into_iter().map(|(_, r, _)| r.value).collect())
}

/// Reference BCF over [lo, hi] at relative tolerance `tolerance`.
pub fn bcf_reference(q: &Qnsd, lo: f64, hi: f64, times: &[f64], tolerance: f64) -> Result<BcfSeries> {
    let opts = OracleOptions { tolerance, ..Default::default() };
    let values = bcf_values(q, lo, hi, times, &opts)?;
    BcfSeries::new(times.to_vec(), values)
}

/// sum_k g_k^2 exp(-i kappa w_k t) at arbitrary times.
pub fn bcf_from_modes_at(modes: &[Mode], times: &[f64]) -> Vec<Complex64> {
    let k = kappa();
    times
        .par_iter()
        .map(|&t| {
            modes
                .iter()
                .map(|m| {
                    let (sin, cos) = (k * m.omega * t).sin_cos();
                    Complex64::new(m.g2 * cos, -m.g2 * sin)
                })
                .sum()
        })
        .collect()
}

/// BCF of a discrete bath on a time grid.
pub fn bcf_from_modes(bath: &DiscreteBath, times: &[f64]) -> Result<BcfSeries> {
    if bath.modes.is_empty() {
        return Err(Error::InvalidParameter("bath has no modes".into()));
    }
    BcfSeries::new(times.to_vec(), bcf_from_modes_at(&bath.modes, times))
}

/// Normalized pointwise error of `approx` against `reference`.
pub fn compare(approx: &BcfSeries, reference: &BcfSeries, method: &str) -> Result<ErrorReport> {
    if approx.times != reference.times {
        return Err(Error::GridMismatch(format!(
            "approximation has {} points, reference {}",
            approx.times.len(),
            reference.times.len()
        )));
    }
    let norm = reference.normalization;
    let errors: Vec<f64> = approx.values.iter().zip(&reference.values).map(|(a, r)| (a - r).norm() / norm).collect();
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    let mean_error = errors.iter().sum::<f64>() / errors.len() as f64;
    Ok(ErrorReport { method: method.to_string(), errors, max_error, mean_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{Method, Provenance};
    use crate::sd::{SpectralDensity, Temperature};

    fn bath(modes: Vec<Mode>) -> DiscreteBath {
        DiscreteBath { modes, temperature: Temperature::Zero, method: Method::Id, provenance: Provenance::default() }
    }

    #[test]
    fn static_mode_is_constant() {
        let b = bath(vec![Mode::new(0.0, 2.0)]);
        let s = bcf_from_modes(&b, &[0.0, 10.0, 1000.0]).unwrap();
        for v in s.values() {
            assert_eq!(*v, Complex64::new(2.0, 0.0));
        }
    }

    #[test]
    fn conjugate_pair_is_real_cosine() {
        let b = bath(vec![Mode::new(-40.0, 1.5), Mode::new(40.0, 1.5)]);
        let times = time_grid(500.0, 11);
        let s = bcf_from_modes(&b, &times).unwrap();
        for (t, v) in times.iter().zip(s.values()) {
            assert!(v.im.abs() < 1e-14);
            assert!((v.re - 3.0 * (kappa() * 40.0 * t).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn compare_identity_and_shift() {
        let times = time_grid(10.0, 5);
        let vals = vec![Complex64::new(2.0, 0.0), Complex64::new(1.0, 1.0), Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.2), Complex64::new(0.1, 0.1)];
        let r = BcfSeries::new(times.clone(), vals.clone()).unwrap();
        assert_eq!(compare(&r, &r, "x").unwrap().max_error, 0.0);
        let mut shifted = vals;
        shifted[3] += Complex64::new(2.0, 0.0);
        let a = BcfSeries::new(times, shifted).unwrap();
        let rep = compare(&a, &r, "x").unwrap();
        assert!((rep.max_error - 1.0).abs() < 1e-15);
        assert!(rep.max_error >= rep.mean_error);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = BcfSeries::new(vec![0.0, 1.0], vec![Complex64::new(1.0, 0.0); 2]).unwrap();
        let b = BcfSeries::new(vec![0.0, 2.0], vec![Complex64::new(1.0, 0.0); 2]).unwrap();
        assert!(matches!(compare(&a, &b, "x"), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn c0_is_real_and_matches_closed_form() {
        let sd = SpectralDensity::power_law(1.0, 5.0, 53.0).unwrap();
        let q = Qnsd::new(sd, Temperature::Zero);
        let s = bcf_reference(&q, 0.0, 53.0 * 60.0, &[0.0, 1000.0], 1e-10).unwrap();
        let c0 = s.values()[0];
        assert!(c0.im.abs() < 1e-12 * c0.re);
        assert!((c0.re - 14045.0).abs() < 1e-6);
        let x = kappa() * 53.0 * 1000.0;
        assert!((x - 9.983).abs() < 1e-3);
        let modulus = 14045.0 / (1.0 + x * x);
        assert!((s.values()[1].norm() - modulus).abs() < 1e-6 * modulus);
        assert!((modulus - 139.5).abs() < 0.5);
    }

    #[test]
    fn finite_temperature_c0_is_real() {
        let sd = SpectralDensity::power_law(1.0, 5.0, 53.0).unwrap();
        let q = Qnsd::new(sd, Temperature::Kelvin(300.0));
        let s = bcf_reference(&q, -500.0, 500.0, &[0.0], 1e-10).unwrap();
        assert_eq!(s.values()[0].im, 0.0);
    }
}
