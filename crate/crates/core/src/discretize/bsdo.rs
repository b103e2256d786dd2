use serde::{Deserialize, Serialize};

use super::{assemble, DiscreteBath, Method, Provenance};
use crate::error::Result;
use crate::linalg::{golub_welsch, stieltjes_jacobi};
use crate::sd::Qnsd;

/// Gauss quadrature with S_beta as the weight on [lo, hi]: nodes are the
/// frequencies and Christoffel weights the g_k^2.
pub fn discretize_bsdo(q: &Qnsd, lo: f64, hi: f64, m: usize) -> Result<DiscreteBath> {
    let jacobi = stieltjes_jacobi(q, lo, hi, m)?;
    let rule = golub_welsch(&jacobi)?;
    let mut provenance = Provenance {
        interval: Some([lo, hi]),
        requested_modes: Some(m),
        recurrence_stabilized: Some(jacobi.stabilized),
        ..Default::default()
    };
    if !jacobi.stabilized {
        provenance.warnings.push(format!(
            "recurrence coefficients not settled to 1e-12 at {} sample points",
            jacobi.sample_points
        ));
    }
    let pairs = rule.nodes.into_iter().zip(rule.weights);
    assemble(pairs, q.temperature(), Method::Bsdo, provenance)
}

/// Chain (star-to-chain) form of the same Jacobi matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCoefficients {
    pub delta_w: f64,
    pub site_energies: Vec<f64>,
    pub hoppings: Vec<f64>,
    pub system_coupling: f64,
}

pub fn chain_map(q: &Qnsd, lo: f64, hi: f64, m: usize) -> Result<ChainCoefficients> {
    let j = stieltjes_jacobi(q, lo, hi, m)?;
    Ok(ChainCoefficients {
        delta_w: j.delta_w,
        hoppings: j.hoppings(),
        system_coupling: j.delta_w.sqrt(),
        site_energies: j.alpha,
    })
}
