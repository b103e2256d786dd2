use super::{assemble, check_even, DiscreteBath, Method, Provenance};
use crate::error::{Error, Result};
use crate::quad::{integrate_real, AdaptiveOptions};
use crate::sd::Qnsd;

const BIN_TOLERANCE: f64 = 1e-12;

/// Logarithmic bins: M/2 - 1 geometric bins per side, [L^-k W, L^-(k-1) W], plus
/// an innermost bin reaching 0. Each bin becomes one mode carrying its weight at
/// its centroid.
pub fn discretize_ld(q: &Qnsd, omega_max: f64, m: usize, ratio: f64) -> Result<DiscreteBath> {
    check_even(m)?;
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("cutoff frequency must be positive (got {omega_max})")));
    }
    if !(ratio > 1.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("log ratio must exceed 1 (got {ratio})")));
    }
    let edges = bin_edges(omega_max, m / 2, ratio);
    let mut pairs = Vec::with_capacity(m);
    let mut empty = 0;
    for sign in [-1.0, 1.0] {
        for e in edges.windows(2) {
            let (a, b) = if sign < 0.0 { (-e[1], -e[0]) } else { (e[0], e[1]) };
            let (g2, first) = bin_moments(q, a, b)?;
            if g2 > 0.0 {
                pairs.push((first / g2, g2));
            } else {
                empty += 1;
            }
        }
    }
    let mut provenance = Provenance {
        interval: Some([-omega_max, omega_max]),
        requested_modes: Some(m),
        ld_ratio: Some(ratio),
        ..Default::default()
    };
    if empty > 0 {
        provenance.warnings.push(format!("{empty} empty bin(s) dropped"));
    }
    assemble(pairs, q.temperature(), Method::Ld, provenance)
}

/// Ascending bin edges 0 = e_0 < e_1 < ... < e_half = W on the positive side.
pub(crate) fn bin_edges(omega_max: f64, half: usize, ratio: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    for k in (0..half).rev() {
        edges.push(omega_max * ratio.powi(-(k as i32)));
    }
    edges
}

fn bin_moments(q: &Qnsd, a: f64, b: f64) -> Result<(f64, f64)> {
    let touches_zero = a == 0.0 || b == 0.0;
    let opts = AdaptiveOptions {
        rel_tol: BIN_TOLERANCE,
        breakpoints: q.breakpoints(a, b),
        singular_points: if touches_zero { vec![0.0] } else { Vec::new() },
        ..Default::default()
    };
    let s = |w: f64| q.density(w);
    let sw = |w: f64| q.density(w) * w;
    let r0 = integrate_real(&s, a, b, &opts);
    let r1 = integrate_real(&sw, a, b, &opts);
    if !r0.converged || !r1.converged {
        return Err(Error::QuadratureDiverged { time_fs: 0.0, achieved: r0.error.max(r1.error), requested: BIN_TOLERANCE });
    }
    Ok((r0.value.re, r1.value.re))
}
