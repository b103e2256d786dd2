use super::matrix::{solve_least_squares, RealMatrix};
use crate::error::{Error, Result};

/// KKT tolerance relative to ||B^T c||_inf.
const KKT_RELATIVE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub z: Vec<f64>,
    /// ||c - B z||_2
    pub residual_norm: f64,
    pub kkt_residual: f64,
    /// The KKT tolerance tau used for this problem.
    pub tolerance: f64,
    pub iterations: usize,
}

/// Worst violation of the KKT conditions of min ||c - Bz|| s.t. z >= 0.
pub fn kkt_residual(b: &RealMatrix, c: &[f64], z: &[f64]) -> f64 {
    let w = gradient(b, c, z);
    z.iter()
        .zip(&w)
        .map(|(&zk, &wk)| if zk > 0.0 { wk.abs() } else { wk.max(0.0).max(-zk) })
        .fold(0.0, f64::max)
}

fn gradient(b: &RealMatrix, c: &[f64], z: &[f64]) -> Vec<f64> {
    let bz = b.matvec(z);
    let r: Vec<f64> = c.iter().zip(&bz).map(|(ci, bi)| ci - bi).collect();
    b.tr_matvec(&r)
}

/// Lawson-Hanson active-set solver for min ||c - B z||_2 subject to z >= 0.
pub fn nnls(b: &RealMatrix, c: &[f64]) -> Result<NnlsSolution> {
    let (m, n) = (b.rows(), b.cols());
    if c.len() != m {
        return Err(Error::InvalidParameter(format!("B has {m} rows but c has {} entries", c.len())));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("B has no columns".into()));
    }
    let btc = b.tr_matvec(c);
    let tolerance = KKT_RELATIVE * btc.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let mut z = vec![0.0; n];
    let mut passive = vec![false; n];
    let mut excluded = vec![false; n];
    let max_iterations = 3 * n + 30;
    let mut iterations = 0;

    loop {
        let w = gradient(b, c, &z);
        let mut entering: Option<usize> = None;
        for j in 0..n {
            if passive[j] || excluded[j] || w[j] <= tolerance {
                continue;
            }
            if entering.map_or(true, |e| w[j] > w[e]) {
                entering = Some(j);
            }
        }
        let Some(j) = entering else { break };
        passive[j] = true;

        loop {
            iterations += 1;
            if iterations > max_iterations {
                let kkt = kkt_residual(b, c, &z);
                return Err(Error::NnlsIterationCap { best: z, kkt_residual: kkt, iterations });
            }
            let active: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = b.select_columns(&active);
            let s_active = solve_least_squares(&sub, c);
            let mut s = vec![0.0; n];
            for (&k, &v) in active.iter().zip(&s_active) {
                s[k] = v;
            }
            if active.iter().all(|&k| s[k] > 0.0) {
                z = s;
                break;
            }
            let mut step = f64::INFINITY;
            for &k in &active {
                if s[k] <= 0.0 {
                    step = step.min(z[k] / (z[k] - s[k]));
                }
            }
            for k in 0..n {
                z[k] += step * (s[k] - z[k]);
            }
            for &k in &active {
                if z[k] <= 0.0 || (s[k] <= 0.0 && z[k] / (z[k] - s[k]) <= step) {
                    passive[k] = false;
                    z[k] = 0.0;
                }
            }
        }
        if z[j] == 0.0 {
            // column j cannot enter numerically; skip it until the iterate moves
            excluded[j] = true;
        } else {
            excluded.iter_mut().for_each(|e| *e = false);
        }
    }

    let bz = b.matvec(&z);
    let residual_norm = c.iter().zip(&bz).map(|(ci, bi)| (ci - bi).powi(2)).sum::<f64>().sqrt();
    let kkt = kkt_residual(b, c, &z);
    Ok(NnlsSolution { z, residual_norm, kkt_residual: kkt, tolerance, iterations })
}
