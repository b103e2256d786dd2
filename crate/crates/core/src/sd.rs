//! Spectral densities and the temperature-dressed quantum noise spectral density.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::beta_from_kelvin;

/// A smooth surrogate for J(omega) on a finite frequency range.
///
/// Implemented by [`crate::tabulated::RationalInterpolant`]; tests and callers
/// may supply their own shapes.
pub trait SdInterpolant: Send + Sync + fmt::Debug {
    fn eval(&self, omega: f64) -> f64;

    /// Frequency range covered by the data. J vanishes outside it.
    fn range(&self) -> (f64, f64);

    /// Points where the integrand has sharp features and quadrature should split.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Power law with exponential cut-off, J(w) = pi alpha wc^(1-s) w^s exp(-w/wc).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub s: f64,
    pub alpha: f64,
    pub omega_c: f64,
}

impl PowerLaw {
    #[inline]
    fn value(&self, omega: f64) -> f64 {
        PI * self.alpha * self.omega_c.powf(1.0 - self.s) * omega.powf(self.s) * (-omega / self.omega_c).exp()
    }
}

#[derive(Debug, Clone)]
pub struct TabulatedSd {
    pub interpolant: Arc<dyn SdInterpolant>,
    /// J is set to zero below this frequency.
    pub omega_floor: f64,
}

impl TabulatedSd {
    fn value(&self, omega: f64) -> f64 {
        let (lo, hi) = self.interpolant.range();
        if omega < self.omega_floor || omega < lo || omega > hi {
            return 0.0;
        }
        self.interpolant.eval(omega).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub enum SpectralDensity {
    PowerLaw(PowerLaw),
    Tabulated(TabulatedSd),
}

/// Behaviour of J(omega)/omega as omega -> 0+.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SlopeAtZero {
    Finite(f64),
    Infinite,
}

impl SpectralDensity {
    pub fn power_law(s: f64, alpha: f64, omega_c: f64) -> Result<Self> {
        if !(s > 0.0 && alpha > 0.0 && omega_c > 0.0) || !(s.is_finite() && alpha.is_finite() && omega_c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power law needs s > 0, alpha > 0, omega_c > 0 (got s = {s}, alpha = {alpha}, omega_c = {omega_c})"
            )));
        }
        Ok(Self::PowerLaw(PowerLaw { s, alpha, omega_c }))
    }

    pub fn tabulated(interpolant: Arc<dyn SdInterpolant>, omega_floor: f64) -> Result<Self> {
        if !(omega_floor >= 0.0) {
            return Err(Error::InvalidParameter(format!("omega_floor must be >= 0 (got {omega_floor})")));
        }
        Ok(Self::Tabulated(TabulatedSd { interpolant, omega_floor }))
    }

    /// J(omega) for omega >= 0.
    pub fn eval(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::Domain { omega });
        }
        Ok(self.value(omega))
    }

    #[inline]
    pub(crate) fn value(&self, omega: f64) -> f64 {
        match self {
            Self::PowerLaw(p) => p.value(omega),
            Self::Tabulated(t) => t.value(omega),
        }
    }

    pub(crate) fn slope_at_zero(&self) -> SlopeAtZero {
        match self {
            Self::PowerLaw(p) if p.s > 1.0 => SlopeAtZero::Finite(0.0),
            Self::PowerLaw(p) if p.s == 1.0 => SlopeAtZero::Finite(PI * p.alpha),
            Self::PowerLaw(_) => SlopeAtZero::Infinite,
            Self::Tabulated(t) => {
                let (lo, hi) = t.interpolant.range();
                if t.omega_floor > 0.0 || lo > 0.0 {
                    return SlopeAtZero::Finite(0.0);
                }
                if t.value(0.0) > 0.0 {
                    return SlopeAtZero::Infinite;
                }
                let h = 1e-7 * (hi - lo).max(1.0);
                SlopeAtZero::Finite(t.value(h) / h)
            }
        }
    }

    /// Largest frequency with nonzero J, when finite.
    pub fn support_max(&self) -> Option<f64> {
        match self {
            Self::PowerLaw(_) => None,
            Self::Tabulated(t) => Some(t.interpolant.range().1),
        }
    }

    /// Positive frequencies where J is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::PowerLaw(_) => Vec::new(),
            Self::Tabulated(t) => {
                let (lo, hi) = t.interpolant.range();
                let mut pts = vec![t.omega_floor, lo, hi];
                pts.extend(t.interpolant.breakpoints());
                pts.retain(|&p| p > 0.0);
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                pts
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Temperature {
    Zero,
    Kelvin(f64),
}

impl Temperature {
    pub fn kelvin(t: f64) -> Result<Self> {
        if t == 0.0 {
            Ok(Self::Zero)
        } else if t > 0.0 && t.is_finite() {
            Ok(Self::Kelvin(t))
        } else {
            Err(Error::InvalidParameter(format!("temperature must be >= 0 K (got {t})")))
        }
    }

    pub fn as_kelvin(self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Kelvin(t) => t,
        }
    }
}

/// S_beta(omega) = J(omega) [coth(beta omega / 2) + 1] / (2 pi), with J extended oddly.
#[derive(Debug, Clone)]
pub struct Qnsd {
    sd: SpectralDensity,
    temperature: Temperature,
    beta: Option<f64>,
}

impl Qnsd {
    pub fn new(sd: SpectralDensity, temperature: Temperature) -> Self {
        let beta = match temperature {
            Temperature::Zero => None,
            Temperature::Kelvin(t) => Some(beta_from_kelvin(t)),
        };
        Self { sd, temperature, beta }
    }

    pub fn sd(&self) -> &SpectralDensity {
        &self.sd
    }

    pub fn temperature(&self) -> Temperature {
        self.temperature
    }

    /// Inverse temperature in cm; `None` at zero temperature.
    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    /// True when S_beta diverges (integrably) at omega = 0.
    pub fn is_singular_at_zero(&self) -> bool {
        self.beta.is_some() && self.sd.slope_at_zero() == SlopeAtZero::Infinite
    }

    /// Evaluate S_beta(omega). At omega = 0 returns the analytic limit, or
    /// [`Error::Singular`] when the density diverges there.
    pub fn eval(&self, omega: f64) -> Result<f64> {
        if omega.is_nan() {
            return Err(Error::Domain { omega });
        }
        if omega == 0.0 {
            return match (self.beta, self.sd.slope_at_zero()) {
                (None, _) => Ok(self.sd.value(0.0) / PI),
                (Some(beta), SlopeAtZero::Finite(slope)) => Ok(slope / (PI * beta)),
                (Some(_), SlopeAtZero::Infinite) => Err(Error::Singular { omega }),
            };
        }
        Ok(self.density(omega))
    }

    /// Unchecked S_beta(omega); +inf at a singular origin.
    #[inline]
    pub(crate) fn density(&self, omega: f64) -> f64 {
        match self.beta {
            None => {
                if omega > 0.0 {
                    self.sd.value(omega) / PI
                } else if omega == 0.0 {
                    self.sd.value(0.0) / PI
                } else {
                    0.0
                }
            }
            Some(beta) => {
                if omega == 0.0 {
                    return self.eval(0.0).unwrap_or(f64::INFINITY);
                }
                let j_odd = if omega > 0.0 { self.sd.value(omega) } else { -self.sd.value(-omega) };
                // (coth(x/2) + 1) / 2 = 1 / (1 - e^-x)
                let denom = -(-beta * omega).exp_m1();
                if j_odd == 0.0 {
                    0.0
                } else {
                    j_odd / (PI * denom)
                }
            }
        }
    }

    /// Frequencies in [lo, hi] where the integrand should be split: the origin and
    /// every non-smooth point of J (mirrored at finite temperature).
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = vec![0.0];
        for p in self.sd.breakpoints() {
            pts.push(p);
            if self.beta.is_some() {
                pts.push(-p);
            }
        }
        pts.retain(|&p| p > lo && p < hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}
