//! Tabulated spectral densities: parsing, smoothing-spline denoising, and AAA
//! barycentric rational fits.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sd::SdInterpolant;

const MIN_TABLE_POINTS: usize = 8;

/// Default AAA relative tolerance for tabulated spectral densities.
pub const DEFAULT_AAA_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_AAA_MAX_DEGREE: usize = 100;

/// Samples (w_i, J_i) with strictly increasing w.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdTable {
    omega: Vec<f64>,
    values: Vec<f64>,
}

impl SdTable {
    pub fn new(omega: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omega.len() != values.len() {
            return Err(Error::Table(format!("{} abscissae but {} values", omega.len(), values.len())));
        }
        if omega.len() < MIN_TABLE_POINTS {
            return Err(Error::Table(format!("need at least {MIN_TABLE_POINTS} rows (got {})", omega.len())));
        }
        if let Some(i) = omega.iter().chain(&values).position(|v| !v.is_finite()) {
            return Err(Error::Table(format!("non-finite entry at position {i}")));
        }
        if let Some(i) = omega.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Table(format!(
                "frequencies must increase strictly (row {} has {} after {})",
                i + 2,
                omega[i + 1],
                omega[i]
            )));
        }
        Ok(Self { omega, values })
    }

    /// Two numeric columns separated by whitespace or commas; '#' starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut omega = Vec::new();
        let mut values = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
            if fields.len() != 2 {
                return Err(Error::Table(format!("line {}: expected 2 columns, found {}", n + 1, fields.len())));
            }
            let parse = |f: &str| f.parse::<f64>().map_err(|_| Error::Table(format!("line {}: '{f}' is not a number", n + 1)));
            omega.push(parse(fields[0])?);
            values.push(parse(fields[1])?);
        }
        Self::new(omega, values)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Table(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.omega[0], self.omega[self.omega.len() - 1])
    }
}

/// Cubic smoothing spline values on the table abscissae, minimizing
/// sum (y_i - g_i)^2 + lambda * integral g''^2.
pub fn smooth_table(table: &SdTable, lambda: f64) -> Result<SdTable> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("smoothing parameter must be >= 0 (got {lambda})")));
    }
    if lambda == 0.0 {
        return Ok(table.clone());
    }
    let spline = Reinsch::new(table.omega());
    let fit = spline.solve(table.values(), lambda);
    SdTable::new(table.omega.clone(), fit.values)
}

/// Smoothing parameter minimizing the generalized cross-validation score.
pub fn gcv_lambda(table: &SdTable) -> f64 {
    let spline = Reinsch::new(table.omega());
    let y = table.values();
    let n = y.len() as f64;
    let h_mean = (table.range().1 - table.range().0) / (n - 1.0);
    let scale = h_mean.powi(3);
    let score = |log10: f64| {
        let fit = spline.solve(y, scale * 10f64.powf(log10));
        let rss: f64 = fit.values.iter().zip(y).map(|(g, y)| (g - y).powi(2)).sum();
        let dof = n - fit.trace_hat;
        n * rss / (dof * dof)
    };
    let (lo, hi, step) = (-4.0, 12.0, 0.25);
    let steps = ((hi - lo) / step) as usize;
    let mut best = (lo, score(lo));
    for i in 1..=steps {
        let x = lo + step * i as f64;
        let s = score(x);
        if s < best.1 {
            best = (x, s);
        }
    }
    // golden-section refinement around the best grid point
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (score(c), score(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = score(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = score(d);
        }
    }
    let x = if fc.min(fd) < best.1 { if fc < fd { c } else { d } } else { best.0 };
    scale * 10f64.powf(x)
}

/// Smooth with the GCV-selected parameter; returns the table and the parameter.
pub fn smooth_table_gcv(table: &SdTable) -> Result<(SdTable, f64)> {
    let lambda = gcv_lambda(table);
    Ok((smooth_table(table, lambda)?, lambda))
}

struct SplineFit {
    values: Vec<f64>,
    /// trace of the hat matrix
    trace_hat: f64,
}

/// Reinsch form: (R + lambda Q^T Q) gamma = Q^T y, g = y - lambda Q gamma.
struct Reinsch {
    h: Vec<f64>,
}

impl Reinsch {
    fn new(x: &[f64]) -> Self {
        Self { h: x.windows(2).map(|w| w[1] - w[0]).collect() }
    }

    /// Nonzero entries of column c (interior knot c + 1) of Q: rows c, c + 1, c + 2.
    fn q_column(&self, c: usize) -> [f64; 3] {
        let (h0, h1) = (self.h[c], self.h[c + 1]);
        [1.0 / h0, -1.0 / h0 - 1.0 / h1, 1.0 / h1]
    }

    fn solve(&self, y: &[f64], lambda: f64) -> SplineFit {
        let n = y.len();
        let k = n - 2;
        let q: Vec<[f64; 3]> = (0..k).map(|c| self.q_column(c)).collect();
        // symmetric pentadiagonal A = R + lambda Q^T Q, stored as three diagonals
        let mut a0 = vec![0.0; k];
        let mut a1 = vec![0.0; k];
        let mut a2 = vec![0.0; k];
        let mut qtq0 = vec![0.0; k];
        let mut qtq1 = vec![0.0; k];
        let mut qtq2 = vec![0.0; k];
        for i in 0..k {
            qtq0[i] = q[i].iter().map(|v| v * v).sum();
            if i + 1 < k {
                qtq1[i] = q[i][1] * q[i + 1][0] + q[i][2] * q[i + 1][1];
            }
            if i + 2 < k {
                qtq2[i] = q[i][2] * q[i + 2][0];
            }
            a0[i] = (self.h[i] + self.h[i + 1]) / 3.0 + lambda * qtq0[i];
            if i + 1 < k {
                a1[i] = self.h[i + 1] / 6.0 + lambda * qtq1[i];
            }
            a2[i] = lambda * qtq2[i];
        }
        // banded LDL^T
        let mut d = vec![0.0; k];
        let mut l1 = vec![0.0; k];
        let mut l2 = vec![0.0; k];
        for i in 0..k {
            let mut di = a0[i];
            if i >= 1 {
                di -= l1[i - 1] * l1[i - 1] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i - 2] * l2[i - 2] * d[i - 2];
            }
            d[i] = di;
            if i + 1 < k {
                let mut v = a1[i];
                if i >= 1 {
                    v -= l1[i - 1] * l2[i - 1] * d[i - 1];
                }
                l1[i] = v / di;
            }
            if i + 2 < k {
                l2[i] = a2[i] / di;
            }
        }
        // Q^T y, then forward / diagonal / backward solves
        let mut g: Vec<f64> = (0..k).map(|c| q[c][0] * y[c] + q[c][1] * y[c + 1] + q[c][2] * y[c + 2]).collect();
        for i in 0..k {
            if i >= 1 {
                g[i] -= l1[i - 1] * g[i - 1];
            }
            if i >= 2 {
                g[i] -= l2[i - 2] * g[i - 2];
            }
        }
        for i in 0..k {
            g[i] /= d[i];
        }
        for i in (0..k).rev() {
            if i + 1 < k {
                g[i] -= l1[i] * g[i + 1];
            }
            if i + 2 < k {
                g[i] -= l2[i] * g[i + 2];
            }
        }
        let mut values = y.to_vec();
        for c in 0..k {
            for r in 0..3 {
                values[c + r] -= lambda * q[c][r] * g[c];
            }
        }
        // central band of A^-1 by the Hutchinson-de Hoog recursion
        let mut s0 = vec![0.0; k];
        let mut s1 = vec![0.0; k];
        let mut s2 = vec![0.0; k];
        for i in (0..k).rev() {
            let s11 = if i + 1 < k { s0[i + 1] } else { 0.0 };
            let s22 = if i + 2 < k { s0[i + 2] } else { 0.0 };
            let s12 = if i + 2 < k { s1[i + 1] } else { 0.0 };
            let li1 = if i + 1 < k { l1[i] } else { 0.0 };
            let li2 = if i + 2 < k { l2[i] } else { 0.0 };
            if i + 2 < k {
                s2[i] = -li1 * s12 - li2 * s22;
            }
            if i + 1 < k {
                s1[i] = -li1 * s11 - li2 * s12;
            }
            s0[i] = 1.0 / d[i] - li1 * s1[i] - li2 * s2[i];
        }
        let mut tr = 0.0;
        for i in 0..k {
            tr += s0[i] * qtq0[i] + 2.0 * s1[i] * qtq1[i] + 2.0 * s2[i] * qtq2[i];
        }
        SplineFit { values, trace_hat: n as f64 - lambda * tr }
    }
}

/// Barycentric rational interpolant r(w) = sum_j w_j f_j / (w - z_j) / sum_j w_j / (w - z_j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalInterpolant {
    support_points: Vec<f64>,
    support_values: Vec<f64>,
    barycentric_weights: Vec<f64>,
    domain: (f64, f64),
}

impl RationalInterpolant {
    pub fn new(support_points: Vec<f64>, support_values: Vec<f64>, barycentric_weights: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        let k = support_points.len();
        if k == 0 || support_values.len() != k || barycentric_weights.len() != k {
            return Err(Error::InvalidParameter("support points, values, and weights must have equal nonzero length".into()));
        }
        let mut sorted = support_points.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("support points must be distinct".into()));
        }
        Ok(Self { support_points, support_values, barycentric_weights, domain })
    }

    pub fn support_points(&self) -> &[f64] {
        &self.support_points
    }

    pub fn support_values(&self) -> &[f64] {
        &self.support_values
    }

    pub fn barycentric_weights(&self) -> &[f64] {
        &self.barycentric_weights
    }

    /// Degree of numerator and denominator.
    pub fn degree(&self) -> usize {
        self.support_points.len() - 1
    }

    /// Raw barycentric value, exact at support points.
    pub fn eval(&self, x: f64) -> f64 {
        barycentric(&self.support_points, &self.support_values, &self.barycentric_weights, x)
    }

    /// Sign of the denominator polynomial d(x) prod_j (x - z_j); its sign changes mark real poles.
    pub fn denominator_sign(&self, x: f64) -> f64 {
        denominator_sign(&self.support_points, &self.barycentric_weights, x)
    }

    /// Poles (zeros of the barycentric denominator), as complex numbers.
    pub fn poles(&self) -> Vec<num_complex::Complex64> {
        poles(&self.support_points, &self.barycentric_weights)
    }
}

impl SdInterpolant for RationalInterpolant {
    fn eval(&self, omega: f64) -> f64 {
        RationalInterpolant::eval(self, omega)
    }

    fn range(&self) -> (f64, f64) {
        self.domain
    }
}

fn barycentric(z: &[f64], f: &[f64], w: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&zj, &fj), &wj) in z.iter().zip(f).zip(w) {
        let d = x - zj;
        if d == 0.0 {
            return fj;
        }
        num += wj * fj / d;
        den += wj / d;
    }
    num / den
}

fn denominator_sign(z: &[f64], w: &[f64], x: f64) -> f64 {
    let mut den = 0.0;
    let mut sign = 1.0;
    for (&zj, &wj) in z.iter().zip(w) {
        let d = x - zj;
        if d == 0.0 {
            // limit of d(x) prod (x - z_i): w_j prod_{i != j} (z_j - z_i)
            let s: f64 = z.iter().filter(|&&zi| zi != zj).map(|&zi| (zj - zi).signum()).product();
            return wj.signum() * s;
        }
        den += wj / d;
        sign *= d.signum();
    }
    den.signum() * sign
}

fn poles(z: &[f64], w: &[f64]) -> Vec<num_complex::Complex64> {
    let k = z.len();
    if k < 2 {
        return Vec::new();
    }
    let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let v: Vec<f64> = w.iter().map(|x| x / wn).collect();
    let w1: f64 = v.iter().sum();
    if w1.abs() <= 1e-14 * v.iter().map(|x| x.abs()).sum::<f64>() {
        // denominator degree drops; fall back to the companion pencil
        return pencil_poles(z, w);
    }
    // Householder reflector mapping e_1 to -sign(v_0) v; its last k - 1 columns span v-perp
    let mut u = v.clone();
    u[0] += if v[0] >= 0.0 { 1.0 } else { -1.0 };
    let uu: f64 = u.iter().map(|x| x * x).sum();
    let basis = DMatrix::from_fn(k, k - 1, |i, j| {
        let col = j + 1;
        let e = if i == col { 1.0 } else { 0.0 };
        e - 2.0 * u[i] * u[col] / uu
    });
    let zq = DMatrix::from_fn(k, k - 1, |i, j| z[i] * basis[(i, j)]);
    let qt_zq = basis.transpose() * &zq;
    let qt1: Vec<f64> = (0..k - 1).map(|j| basis.column(j).sum()).collect();
    let wt_zq: Vec<f64> = (0..k - 1).map(|j| (0..k).map(|i| v[i] * zq[(i, j)]).sum()).collect();
    let m = DMatrix::from_fn(k - 1, k - 1, |i, j| qt_zq[(i, j)] - qt1[i] * wt_zq[j] / w1);
    m.complex_eigenvalues().iter().copied().collect()
}

/// Finite eigenvalues of the arrowhead pencil, computed through a shifted standard problem.
fn pencil_poles(z: &[f64], w: &[f64]) -> Vec<num_complex::Complex64> {
    // zeros of sum_j w_j / (x - z_j): perturbing the weights slightly keeps w^T 1 away from 0
    let total: f64 = w.iter().map(|v| v.abs()).sum();
    let mut w2 = w.to_vec();
    w2[0] += 1e-10 * total;
    let v: Vec<f64> = w2.iter().map(|x| x / total).collect();
    if v.iter().sum::<f64>().abs() <= 1e-14 {
        return Vec::new();
    }
    poles(z, &w2)
}

/// Real poles inside [a, b]: near-real eigenvalues plus sign changes of the denominator.
fn poles_in_range(z: &[f64], w: &[f64], samples: &[f64], a: f64, b: f64) -> Vec<f64> {
    let scale = (b - a).abs().max(a.abs()).max(b.abs());
    let mut found: Vec<f64> = poles(z, w)
        .into_iter()
        .filter(|p| p.im.abs() <= 1e-8 * scale && p.re >= a && p.re <= b)
        .map(|p| p.re)
        .collect();
    let mut prev: Option<(f64, f64)> = None;
    for &x in samples {
        let s = denominator_sign(z, w, x);
        if s == 0.0 {
            continue;
        }
        if let Some((px, ps)) = prev {
            if ps != s {
                found.push(0.5 * (px + x));
            }
        }
        prev = Some((x, s));
    }
    found
}

/// Weights from the smallest right singular vector of the Loewner matrix.
fn loewner_weights(x: &[f64], f: &[f64], support: &[usize], is_support: &[bool]) -> Vec<f64> {
    let k = support.len();
    let rows: Vec<usize> = (0..x.len()).filter(|&i| !is_support[i]).collect();
    let nrows = rows.len().max(k);
    let a = DMatrix::from_fn(nrows, k, |r, c| {
        if r >= rows.len() {
            return 0.0;
        }
        let i = rows[r];
        let j = support[c];
        (f[i] - f[j]) / (x[i] - x[j])
    });
    let reduced = if nrows > k { a.qr().r() } else { a };
    let svd = reduced.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut idx = 0;
    for i in 1..svd.singular_values.len() {
        if svd.singular_values[i] < svd.singular_values[idx] {
            idx = i;
        }
    }
    let mut w: Vec<f64> = vt.row(idx).iter().copied().collect();
    let big = w.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    if big < 0.0 {
        w.iter_mut().for_each(|v| *v = -*v);
    }
    w
}

/// Accepted evaluation noise, as a fraction of the larger of the requested
/// tolerance and the candidate's own error.
const MAX_ROUNDOFF: f64 = 1e-2;
/// Steps without an accepted improvement before the greedy loop gives up.
const STALL_STEPS: usize = 20;

struct Candidate {
    support: Vec<usize>,
    weights: Vec<f64>,
    error: f64,
}

fn max_error(x: &[f64], f: &[f64], support: &[usize], w: &[f64]) -> f64 {
    let z: Vec<f64> = support.iter().map(|&j| x[j]).collect();
    let fz: Vec<f64> = support.iter().map(|&j| f[j]).collect();
    x.iter()
        .zip(f)
        .map(|(&xi, &fi)| {
            let r = barycentric(&z, &fz, w, xi);
            if r.is_finite() {
                (r - fi).abs()
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Worst-case rounding error of the barycentric quotient over `samples`,
/// relative to `scale`. Fits that survive only through cancellation between
/// large terms evaluate noisily and are not accepted.
fn roundoff(z: &[f64], fz: &[f64], w: &[f64], samples: &[f64], scale: f64) -> f64 {
    let mut worst = 0.0f64;
    for &x in samples {
        if z.contains(&x) {
            continue;
        }
        let (mut num, mut den, mut num_abs, mut den_abs) = (0.0, 0.0, 0.0, 0.0);
        for ((&zj, &fj), &wj) in z.iter().zip(fz).zip(w) {
            let c = wj / (x - zj);
            num += c * fj;
            den += c;
            num_abs += (c * fj).abs();
            den_abs += c.abs();
        }
        let r = (num / den).abs();
        let e = f64::EPSILON * (num_abs + r * den_abs) / den.abs();
        worst = worst.max(if e.is_finite() { e } else { f64::INFINITY });
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Remove support points nearest to in-range real poles, re-solving the weights each time.
fn cleanup(x: &[f64], f: &[f64], samples: &[f64], mut support: Vec<usize>, mut weights: Vec<f64>) -> (Vec<usize>, Vec<f64>) {
    let (a, b) = (x[0], x[x.len() - 1]);
    while support.len() > 1 {
        let z: Vec<f64> = support.iter().map(|&j| x[j]).collect();
        let bad = poles_in_range(&z, &weights, samples, a, b);
        let Some(&p) = bad.first() else { break };
        let nearest = (0..z.len())
            .min_by(|&i, &j| (z[i] - p).abs().total_cmp(&(z[j] - p).abs()).then(i.cmp(&j)))
            .expect("nonempty support");
        support.remove(nearest);
        let mut is_support = vec![false; x.len()];
        support.iter().for_each(|&j| is_support[j] = true);
        weights = loewner_weights(x, f, &support, &is_support);
    }
    (support, weights)
}

/// Greedy AAA fit. Stops once max_i |r(w_i) - J_i| <= tol * max_i |J_i|, or at
/// `max_degree` or after a long run without progress, in which case the error
/// carries the best interpolant found. Every candidate is cleared of real poles
/// inside the table range, and candidates that only evaluate through heavy
/// cancellation are skipped.
pub fn aaa_fit(table: &SdTable, tol: f64, max_degree: usize) -> Result<RationalInterpolant> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("AAA tolerance must be positive (got {tol})")));
    }
    let x = table.omega();
    let f = table.values();
    let n = x.len();
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let target = tol * fmax;
    let samples: Vec<f64> = x
        .windows(2)
        .flat_map(|p| (0..4).map(move |s| p[0] + (p[1] - p[0]) * s as f64 / 4.0))
        .chain(std::iter::once(x[n - 1]))
        .collect();

    let mut is_support = vec![false; n];
    let mut support: Vec<usize> = Vec::new();
    let mean = f.iter().sum::<f64>() / n as f64;
    let mut approx = vec![mean; n];
    let mut best: Option<Candidate> = None;
    let mut stalled = 0;

    let max_support = (max_degree + 1).min(n);
    while support.len() < max_support {
        let mut j = usize::MAX;
        let mut worst = -1.0;
        for i in 0..n {
            let e = (f[i] - approx[i]).abs();
            if !is_support[i] && (e > worst || !e.is_finite() && worst.is_finite()) {
                worst = e;
                j = i;
            }
        }
        if j == usize::MAX {
            break;
        }
        is_support[j] = true;
        support.push(j);
        let weights = loewner_weights(x, f, &support, &is_support);
        let z: Vec<f64> = support.iter().map(|&s| x[s]).collect();
        let fz: Vec<f64> = support.iter().map(|&s| f[s]).collect();
        for i in 0..n {
            approx[i] = if is_support[i] { f[i] } else { barycentric(&z, &fz, &weights, x[i]) };
        }

        let (cs, cw) = cleanup(x, f, &samples, support.clone(), weights);
        let error = max_error(x, f, &cs, &cw);
        let improves = best.as_ref().map_or(true, |b| error < b.error);
        if improves {
            let zc: Vec<f64> = cs.iter().map(|&j| x[j]).collect();
            let fc: Vec<f64> = cs.iter().map(|&j| f[j]).collect();
            let floor = MAX_ROUNDOFF * tol.max(error / fmax.max(f64::MIN_POSITIVE));
            if best.is_none() || roundoff(&zc, &fc, &cw, &samples, fmax) <= floor {
                best = Some(Candidate { support: cs, weights: cw, error });
                stalled = 0;
            }
        }
        if best.as_ref().is_some_and(|b| b.error <= target) {
            break;
        }
        stalled += 1;
        if stalled > STALL_STEPS {
            break;
        }
    }

    let best = best.expect("at least one support point");
    let interpolant = RationalInterpolant::new(
        best.support.iter().map(|&j| x[j]).collect(),
        best.support.iter().map(|&j| f[j]).collect(),
        best.weights,
        table.range(),
    )?;
    if best.error <= target {
        Ok(interpolant)
    } else {
        let achieved = if fmax > 0.0 { best.error / fmax } else { best.error };
        Err(Error::AaaNotConverged { best: Box::new(interpolant), achieved, requested: tol })
    }
}
