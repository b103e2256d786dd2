use serde::{Deserialize, Serialize};

use super::{assemble, DiscreteBath, DiscretizationGrid, Method, Provenance};
use crate::bcf::{bcf_from_modes_at, bcf_values, OracleOptions, ORACLE_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::{id_decompose, nnls, IdMode, RealMatrix};
use crate::sd::Qnsd;
use crate::units::kappa;

/// Quadrature weights w_j on the fine frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
    /// Equal weights (midpoint-style sum).
    Rectangle,
}

impl QuadratureRule {
    fn weights(self, n: usize, h: f64) -> Vec<f64> {
        let mut w = vec![h; n];
        if self == Self::Trapezoid {
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
        }
        w
    }
}

impl std::str::FromStr for QuadratureRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trapezoid" => Ok(Self::Trapezoid),
            "rectangle" => Ok(Self::Rectangle),
            other => Err(Error::InvalidParameter(format!("unknown quadrature rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdOptions {
    pub mode: IdMode,
    pub quadrature: QuadratureRule,
    /// Relative tolerance of the reference BCF used for the NNLS right-hand side.
    pub oracle_tolerance: f64,
}

impl Default for IdOptions {
    fn default() -> Self {
        Self { mode: IdMode::Rank(20), quadrature: QuadratureRule::Trapezoid, oracle_tolerance: ORACLE_TOLERANCE }
    }
}

/// Bath from an interpolative decomposition of f(t_i, w_j) = S(w_j) exp(-i kappa w_j t_i)
/// followed by NNLS against the reference BCF on the same times.
pub fn discretize_id(q: &Qnsd, grid: &DiscretizationGrid, opts: &IdOptions) -> Result<DiscreteBath> {
    let times = grid.times();
    let mut omegas = grid.frequencies();
    let mut provenance = Provenance {
        grid: Some(*grid),
        id_mode: Some(opts.mode),
        quadrature: Some(opts.quadrature),
        ..Default::default()
    };
    if q.is_singular_at_zero() {
        let half = 0.5 * grid.frequency_step();
        for w in omegas.iter_mut().filter(|w| **w == 0.0) {
            *w = half;
            provenance.warnings.push(format!("singular grid point omega = 0 moved to {half} cm^-1"));
        }
    }
    let s: Vec<f64> = omegas.iter().map(|&w| q.density(w)).collect();
    if let Some(j) = s.iter().position(|v| !v.is_finite()) {
        return Err(Error::Singular { omega: omegas[j] });
    }

    let m = times.len();
    let k = kappa();
    let f = RealMatrix::from_fn(2 * m, omegas.len(), |i, j| {
        let (t, imag) = if i < m { (times[i], false) } else { (times[i - m], true) };
        let phase = k * omegas[j] * t;
        if imag {
            -s[j] * phase.sin()
        } else {
            s[j] * phase.cos()
        }
    });

    let id = id_decompose(&f, opts.mode)?;
    let selected = &id.selected_columns;
    let w = opts.quadrature.weights(omegas.len(), grid.frequency_step());
    provenance.pivot_frequencies = selected.iter().map(|&j| omegas[j]).collect();
    provenance.quadrature_weights = id.interpolation.matvec(&w);
    provenance.id_relative_residual = Some(id.residual_norm / id.matrix_norm);
    provenance.id_tolerance_reached = Some(id.tolerance_reached);
    if !id.tolerance_reached {
        provenance
            .warnings
            .push(format!("ID tolerance not reached; using full numerical rank {}", id.rank()));
    }

    let oracle = OracleOptions { tolerance: opts.oracle_tolerance, ..Default::default() };
    let reference = bcf_values(q, grid.omega_lo, grid.omega_hi, &times, &oracle)?;
    let c: Vec<f64> = reference.iter().map(|v| v.re).chain(reference.iter().map(|v| v.im)).collect();

    let b = f.select_columns(selected);
    let sol = nnls(&b, &c)?;
    provenance.nnls_kkt_residual = Some(sol.kkt_residual);

    let pairs: Vec<(f64, f64)> = selected.iter().zip(&sol.z).map(|(&j, &z)| (omegas[j], z * s[j])).collect();
    let mut bath = assemble(pairs, q.temperature(), Method::Id, provenance)?;

    let fitted = bcf_from_modes_at(&bath.modes, &times);
    let norm = reference[0].norm();
    let achieved = fitted.iter().zip(&reference).map(|(a, r)| (a - r).norm() / norm).fold(0.0, f64::max);
    bath.provenance.achieved_error = Some(achieved);
    Ok(bath)
}
