use rayon::prelude::*;

use super::matrix::{dot, norm2};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::sd::Qnsd;

const PANEL_ORDER: usize = 20;
const OVERSAMPLING: usize = 10;
const STABILITY: f64 = 1e-12;
/// Work cap on N M for a single recurrence pass.
const WORK_CAP: f64 = 2e9;
const GRADING_LEVELS: i32 = 30;

/// Three-term recurrence coefficients of the polynomials orthonormal under a weight.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiMatrix {
    /// Diagonal entries alpha_0..alpha_{M-1}.
    pub alpha: Vec<f64>,
    /// Squared off-diagonal entries eta_1..eta_{M-1}.
    pub eta: Vec<f64>,
    /// Total weight.
    pub delta_w: f64,
    /// False when the sampling grid hit its size cap before the coefficients settled.
    pub stabilized: bool,
    /// Size of the final discretization of the weight.
    pub sample_points: usize,
}

impl JacobiMatrix {
    pub fn size(&self) -> usize {
        self.alpha.len()
    }

    /// Off-diagonal entries sqrt(eta_k).
    pub fn hoppings(&self) -> Vec<f64> {
        self.eta.iter().map(|e| e.sqrt()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    /// Ascending.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Jacobi matrix of size `m` for the weight S_beta on [lo, hi].
///
/// Refuses intervals that contain a singular origin.
pub fn stieltjes_jacobi(q: &Qnsd, lo: f64, hi: f64, m: usize) -> Result<JacobiMatrix> {
    if q.is_singular_at_zero() && lo <= 0.0 && hi >= 0.0 {
        return Err(Error::SingularWeight { lo, hi });
    }
    let mut breakpoints = q.breakpoints(lo, hi);
    // geometric grading toward the origin, where S_beta may have a weak singularity
    let anchor = 0.0f64.clamp(lo, hi);
    let span = hi - lo;
    for k in 1..=GRADING_LEVELS {
        let d = span * 0.5f64.powi(k);
        breakpoints.push(anchor + d);
        breakpoints.push(anchor - d);
    }
    let weight = |w: f64| q.density(w);
    stieltjes_jacobi_weight(&weight, lo, hi, &breakpoints, m)
}

/// Jacobi matrix of size `m` for an arbitrary nonnegative weight on [lo, hi].
///
/// The weight is sampled on composite 20-point Gauss-Legendre panels split at
/// `breakpoints`; the recurrence of that discrete measure comes from the
/// Stieltjes procedure. Panels are halved until the coefficients agree
/// to 1e-12 between successive grids or the work cap is reached.
pub fn stieltjes_jacobi_weight(
    weight: &(dyn Fn(f64) -> f64 + Sync),
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    m: usize,
) -> Result<JacobiMatrix> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one recurrence coefficient".into()));
    }
    let mut edges = vec![lo, hi];
    edges.extend(breakpoints.iter().copied().filter(|&p| p > lo && p < hi));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let scale = lo.abs().max(hi.abs());
    let (gx, gw) = gauss_legendre(PANEL_ORDER);

    // panel width shared by all segments, so graded segments near a singular
    // point do not take samples away from the wide ones
    let mut width = (hi - lo) / (OVERSAMPLING * m).max(PANEL_ORDER).div_ceil(PANEL_ORDER) as f64;
    let mut previous: Option<JacobiMatrix> = None;
    loop {
        let mut x = Vec::new();
        let mut w = Vec::new();
        for s in edges.windows(2) {
            let panels = ((s[1] - s[0]) / width).ceil().max(1.0) as usize;
            let h = (s[1] - s[0]) / panels as f64;
            for p in 0..panels {
                let a = s[0] + h * p as f64;
                for (xi, wi) in gx.iter().zip(&gw) {
                    x.push(a + 0.5 * h * (xi + 1.0));
                    w.push(0.5 * h * wi);
                }
            }
        }
        let values: Vec<f64> = x.par_iter().map(|&xi| weight(xi)).collect();
        for (wi, v) in w.iter_mut().zip(&values) {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::InvalidParameter(format!("weight is {v} inside [{lo}, {hi}]")));
            }
            *wi *= v;
        }
        let n = x.len();
        let current = if n >= m { Some(stieltjes(&x, &w, m, scale)?) } else { None };

        if let (Some(cur), Some(prev)) = (&current, &previous) {
            if coefficient_change(cur, prev, scale) <= STABILITY {
                return Ok(JacobiMatrix { stabilized: true, sample_points: n, ..cur.clone() });
            }
        }
        let next = 2.0 * n as f64;
        if next * m as f64 > WORK_CAP {
            return match current {
                Some(cur) => Ok(JacobiMatrix { stabilized: false, sample_points: n, ..cur }),
                None => Err(Error::InvalidParameter(format!("M = {m} exceeds the sampling budget"))),
            };
        }
        previous = current;
        width *= 0.5;
    }
}

fn coefficient_change(a: &JacobiMatrix, b: &JacobiMatrix, scale: f64) -> f64 {
    let da = a.alpha.iter().zip(&b.alpha).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let de = a.eta.iter().zip(&b.eta).map(|(x, y)| (x.sqrt() - y.sqrt()).abs()).fold(0.0, f64::max);
    let dw = (a.delta_w - b.delta_w).abs() / a.delta_w.abs().max(f64::MIN_POSITIVE);
    (da.max(de) / scale).max(dw)
}

/// Stieltjes procedure on the discrete measure, in orthonormal form: the three
/// term recurrence run on sqrt(w)-scaled polynomial values. O(N M); stable here
/// because N is many times M.
fn stieltjes(x: &[f64], w: &[f64], m: usize, scale: f64) -> Result<JacobiMatrix> {
    let delta_w: f64 = w.iter().sum();
    if !(delta_w > 0.0) {
        return Err(Error::NonPositiveRecurrence { index: 0, value: delta_w });
    }
    let mut prev = vec![0.0; x.len()];
    let mut cur: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let nq = norm2(&cur);
    cur.iter_mut().for_each(|v| *v /= nq);
    let mut alpha = Vec::with_capacity(m);
    let mut eta = Vec::with_capacity(m.saturating_sub(1));
    let mut hop = 0.0;
    for k in 0..m {
        let a: f64 = cur.iter().zip(x).map(|(q, x)| q * q * x).sum();
        alpha.push(a);
        if k + 1 == m {
            break;
        }
        let mut next: Vec<f64> = cur.iter().zip(x).zip(&prev).map(|((q, x), p)| (x - a) * q - hop * p).collect();
        // local correction against the last vector keeps alpha and eta accurate
        let c = dot(&next, &cur);
        next.iter_mut().zip(&cur).for_each(|(v, q)| *v -= c * q);
        hop = norm2(&next);
        if !(hop > 1e-12 * scale) {
            return Err(Error::NonPositiveRecurrence { index: k + 1, value: hop * hop });
        }
        eta.push(hop * hop);
        next.iter_mut().for_each(|v| *v /= hop);
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(JacobiMatrix { alpha, eta, delta_w, stabilized: false, sample_points: x.len() })
}

/// Lanczos on diag(x) started from sqrt(w), with classical Gram-Schmidt applied twice.
#[cfg(test)]
fn lanczos(x: &[f64], w: &[f64], m: usize, scale: f64) -> Result<JacobiMatrix> {
    let delta_w: f64 = w.iter().sum();
    if !(delta_w > 0.0) {
        return Err(Error::NonPositiveRecurrence { index: 0, value: delta_w });
    }
    let mut q0: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let nq = norm2(&q0);
    q0.iter_mut().for_each(|v| *v /= nq);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    basis.push(q0);
    let mut alpha = Vec::with_capacity(m);
    let mut eta = Vec::with_capacity(m.saturating_sub(1));
    for k in 0..m {
        let qk = &basis[k];
        let mut v: Vec<f64> = qk.iter().zip(x).map(|(q, x)| q * x).collect();
        alpha.push(dot(qk, &v));
        if k + 1 == m {
            break;
        }
        for _ in 0..2 {
            let coeffs: Vec<f64> = basis.par_iter().map(|b| dot(b, &v)).collect();
            v.par_chunks_mut(4096).enumerate().for_each(|(c, chunk)| {
                let off = c * 4096;
                for (b, &cj) in basis.iter().zip(&coeffs) {
                    for (vi, bi) in chunk.iter_mut().zip(&b[off..]) {
                        *vi -= cj * bi;
                    }
                }
            });
        }
        let beta = norm2(&v);
        if !(beta > 1e-12 * scale) {
            return Err(Error::NonPositiveRecurrence { index: k + 1, value: beta * beta });
        }
        eta.push(beta * beta);
        v.iter_mut().for_each(|vi| *vi /= beta);
        basis.push(v);
    }
    Ok(JacobiMatrix { alpha, eta, delta_w, stabilized: false, sample_points: x.len() })
}

/// Gauss rule of a Jacobi matrix: nodes are its eigenvalues, weights are
/// Delta_w times the squared first eigenvector components.
pub fn golub_welsch(j: &JacobiMatrix) -> Result<GaussRule> {
    let n = j.alpha.len();
    if n == 0 || j.eta.len() + 1 != n {
        return Err(Error::InvalidParameter(format!(
            "Jacobi matrix with {} diagonal and {} off-diagonal entries",
            n,
            j.eta.len()
        )));
    }
    if let Some((i, &e)) = j.eta.iter().enumerate().find(|(_, e)| !(**e > 0.0)) {
        return Err(Error::NonPositiveRecurrence { index: i + 1, value: e });
    }
    let mut d = j.alpha.clone();
    let mut e: Vec<f64> = j.eta.iter().map(|v| v.sqrt()).collect();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    tqli(&mut d, &mut e, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let nodes = order.iter().map(|&i| d[i]).collect();
    let weights = order.iter().map(|&i| j.delta_w * z[i] * z[i]).collect();
    Ok(GaussRule { nodes, weights })
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix, tracking
/// only the first row of the eigenvector matrix.
fn tqli(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return Err(Error::EigenFailure);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    if d.iter().chain(z.iter()).all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::EigenFailure)
    }
}
