use statrs::function::gamma::{gamma, gamma_lr};

use super::{assemble, check_even, DiscreteBath, Method, Provenance};
use crate::error::{Error, Result};
use crate::quad::{integrate_real, AdaptiveOptions};
use crate::sd::{Qnsd, SlopeAtZero, SpectralDensity};

const BISECTION_STEPS: usize = 200;

/// Mode density method: positive nodes split int_0^inf J/w into M/2 equal parts
/// (nodes at the half-integer quantiles), mirrored to negative frequencies;
/// g_k^2 = S(w_k) / rho(|w_k|) with rho = J(w) / (Gamma w).
pub fn discretize_mdm(q: &Qnsd, m: usize) -> Result<DiscreteBath> {
    check_even(m)?;
    let half = m / 2;
    let density = ModeDensity::new(q.sd())?;
    let gamma_norm = density.total / half as f64;

    let mut pairs = Vec::with_capacity(m);
    for k in 1..=half {
        let target = (k as f64 - 0.5) / half as f64;
        let w = density.quantile(target)?;
        let rho = q.sd().value(w) / (gamma_norm * w);
        for node in [w, -w] {
            let g2 = if rho > 0.0 { q.density(node) / rho } else { 0.0 };
            pairs.push((node, g2));
        }
    }
    let provenance = Provenance { requested_modes: Some(m), ..Default::default() };
    assemble(pairs, q.temperature(), Method::Mdm, provenance)
}

/// Normalized cumulative of J(w)/w on [0, inf).
pub(crate) struct ModeDensity<'a> {
    sd: &'a SpectralDensity,
    total: f64,
}

impl<'a> ModeDensity<'a> {
    pub(crate) fn new(sd: &'a SpectralDensity) -> Result<Self> {
        let total = match sd {
            SpectralDensity::PowerLaw(p) => std::f64::consts::PI * p.alpha * p.omega_c * gamma(p.s),
            SpectralDensity::Tabulated(_) => {
                if sd.slope_at_zero() == SlopeAtZero::Infinite {
                    return Err(Error::InvalidParameter("integral of J(w)/w diverges at w = 0".into()));
                }
                numeric_cumulative(sd, f64::INFINITY)?
            }
        };
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidParameter(format!("integral of J(w)/w is {total}")));
        }
        Ok(Self { sd, total })
    }

    /// Fraction of the total below w.
    pub(crate) fn fraction(&self, w: f64) -> Result<f64> {
        match self.sd {
            SpectralDensity::PowerLaw(p) => Ok(gamma_lr(p.s, w / p.omega_c)),
            SpectralDensity::Tabulated(_) => Ok(numeric_cumulative(self.sd, w)? / self.total),
        }
    }

    fn quantile(&self, target: f64) -> Result<f64> {
        let mut hi = match self.sd {
            SpectralDensity::PowerLaw(p) => p.omega_c,
            SpectralDensity::Tabulated(t) => t.interpolant.range().1,
        };
        let mut expansions = 0;
        while self.fraction(hi)? < target {
            hi *= 2.0;
            expansions += 1;
            if expansions > 200 {
                return Err(Error::RootFind(format!("no upper bracket for quantile {target}")));
            }
        }
        let mut lo = 0.0;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.fraction(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        if !(root > 0.0) {
            return Err(Error::RootFind(format!("quantile {target} collapsed to 0")));
        }
        Ok(root)
    }
}

fn numeric_cumulative(sd: &SpectralDensity, upto: f64) -> Result<f64> {
    let hi = sd.support_max().unwrap_or(f64::INFINITY).min(upto);
    if !(hi > 0.0) {
        return Ok(0.0);
    }
    let f = |w: f64| if w > 0.0 { sd.value(w) / w } else { 0.0 };
    let opts = AdaptiveOptions { rel_tol: 1e-13, breakpoints: sd.breakpoints(), ..Default::default() };
    let r = integrate_real(&f, 0.0, hi, &opts);
    if !r.converged {
        return Err(Error::QuadratureDiverged { time_fs: 0.0, achieved: r.error, requested: 1e-13 });
    }
    Ok(r.value.re)
}
