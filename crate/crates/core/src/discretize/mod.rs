//! Discretization front-ends turning a QNSD into a finite set of bath modes.

mod bsdo;
mod id;
mod ld;
mod mdm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::IdMode;
use crate::sd::Temperature;

pub use bsdo::{chain_map, discretize_bsdo, ChainCoefficients};
pub use id::{discretize_id, IdOptions, QuadratureRule};
pub use ld::discretize_ld;
pub use mdm::discretize_mdm;

/// Equispaced time and frequency samples on which f(t, w) is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationGrid {
    pub cutoff_time_fs: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub time_points: usize,
    pub frequency_points: usize,
}

impl DiscretizationGrid {
    pub fn new(cutoff_time_fs: f64, omega_lo: f64, omega_hi: f64, time_points: usize, frequency_points: usize) -> Result<Self> {
        if !(cutoff_time_fs > 0.0 && cutoff_time_fs.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff time must be positive (got {cutoff_time_fs} fs)")));
        }
        if !(omega_lo < omega_hi) || !omega_lo.is_finite() || !omega_hi.is_finite() {
            return Err(Error::InvalidParameter(format!("empty frequency window [{omega_lo}, {omega_hi}]")));
        }
        if time_points < 2 || frequency_points < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 time and 2 frequency points (got {time_points} x {frequency_points})"
            )));
        }
        Ok(Self { cutoff_time_fs, omega_lo, omega_hi, time_points, frequency_points })
    }

    /// Symmetric window [-omega_max, omega_max].
    pub fn symmetric(cutoff_time_fs: f64, omega_max: f64, time_points: usize, frequency_points: usize) -> Result<Self> {
        Self::new(cutoff_time_fs, -omega_max, omega_max, time_points, frequency_points)
    }

    pub fn times(&self) -> Vec<f64> {
        let m = self.time_points - 1;
        (0..self.time_points).map(|i| self.cutoff_time_fs * i as f64 / m as f64).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.frequency_points - 1;
        let span = self.omega_hi - self.omega_lo;
        (0..self.frequency_points)
            .map(|j| if j == n { self.omega_hi } else { self.omega_lo + span * j as f64 / n as f64 })
            .collect()
    }

    pub fn frequency_step(&self) -> f64 {
        (self.omega_hi - self.omega_lo) / (self.frequency_points - 1) as f64
    }
}

/// One bath mode: frequency and (temperature-dependent) coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    pub g: f64,
    pub g2: f64,
}

impl Mode {
    pub fn new(omega: f64, g2: f64) -> Self {
        Self { omega, g: g2.sqrt(), g2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Id,
    Ld,
    Mdm,
    Bsdo,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Id, Method::Ld, Method::Mdm, Method::Bsdo];

    pub fn label(self) -> &'static str {
        match self {
            Self::Id => "id",
            Self::Ld => "ld",
            Self::Mdm => "mdm",
            Self::Bsdo => "bsdo",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "id" => Ok(Self::Id),
            "ld" => Ok(Self::Ld),
            "mdm" => Ok(Self::Mdm),
            "bsdo" => Ok(Self::Bsdo),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// How a bath was produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<DiscretizationGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id_mode: Option<IdMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureRule>,
    /// Selected frequencies in pivot order.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pivot_frequencies: Vec<f64>,
    /// z = P w from the quadrature, before NNLS; pivot order.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub quadrature_weights: Vec<f64>,
    /// ||E|| / ||f|| of the interpolative decomposition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id_relative_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id_tolerance_reached: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nnls_kkt_residual: Option<f64>,
    /// max_i |C_bar(t_i) - C(t_i)| / |C(0)| on the fitting grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub achieved_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requested_modes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ld_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recurrence_stabilized: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Discrete bath: modes sorted by ascending frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteBath {
    pub modes: Vec<Mode>,
    pub temperature: Temperature,
    pub method: Method,
    pub provenance: Provenance,
}

impl DiscreteBath {
    /// Sum of g_k^2, i.e. C_bar(0).
    pub fn total_weight(&self) -> f64 {
        self.modes.iter().map(|m| m.g2).sum()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }
}

/// Keep positive weights, sort by frequency, and note dropped entries.
pub(crate) fn assemble(
    pairs: impl IntoIterator<Item = (f64, f64)>,
    temperature: Temperature,
    method: Method,
    mut provenance: Provenance,
) -> Result<DiscreteBath> {
    let mut dropped = 0;
    let mut modes: Vec<Mode> = pairs
        .into_iter()
        .filter(|&(_, g2)| {
            let keep = g2 > 0.0 && g2.is_finite();
            if !keep {
                dropped += 1;
            }
            keep
        })
        .map(|(w, g2)| Mode::new(w, g2))
        .collect();
    if modes.is_empty() {
        return Err(Error::DegenerateFit);
    }
    if dropped > 0 {
        provenance.warnings.push(format!("dropped {dropped} mode(s) with zero weight"));
    }
    modes.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    Ok(DiscreteBath { modes, temperature, method, provenance })
}

pub(crate) fn check_even(m: usize) -> Result<()> {
    if m == 0 || m % 2 != 0 {
        return Err(Error::InvalidParameter(format!("mode count must be even and positive (got {m})")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points() {
        let g = DiscretizationGrid::new(1000.0, -500.0, 500.0, 3, 5).unwrap();
        assert_eq!(g.times(), vec![0.0, 500.0, 1000.0]);
        assert_eq!(g.frequencies(), vec![-500.0, -250.0, 0.0, 250.0, 500.0]);
        assert_eq!(g.frequency_step(), 250.0);
        assert!(DiscretizationGrid::new(1000.0, 1.0, 1.0, 3, 5).is_err());
        assert!(DiscretizationGrid::new(1000.0, 0.0, 1.0, 1, 5).is_err());
    }

    #[test]
    fn assemble_drops_and_sorts() {
        let bath = assemble(
            [(3.0, 1.0), (-1.0, 0.0), (1.0, 4.0)],
            Temperature::Zero,
            Method::Ld,
            Provenance::default(),
        )
        .unwrap();
        assert_eq!(bath.frequencies(), vec![1.0, 3.0]);
        assert_eq!(bath.modes[0].g, 2.0);
        assert_eq!(bath.provenance.warnings.len(), 1);
        assert!(matches!(
            assemble([(1.0, 0.0)], Temperature::Zero, Method::Ld, Provenance::default()),
            Err(Error::DegenerateFit)
        ));
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        assert!("spline".parse::<Method>().is_err());
    }
}
