use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense real matrix, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut data = vec![0.0; rows * cols];
        if rows > 0 {
            data.par_chunks_mut(rows).enumerate().for_each(|(j, col)| {
                for (i, v) in col.iter_mut().enumerate() {
                    *v = f(i, j);
                }
            });
        }
        Self { rows, cols, data }
    }

    /// Build from row-major entries.
    pub fn from_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self::from_fn(rows, cols, |i, j| entries[i * cols + j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub(crate) fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Sub-matrix made of the listed columns, in that order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for &j in cols {
            data.extend_from_slice(self.column(j));
        }
        Self { rows: self.rows, cols: cols.len(), data }
    }

    pub fn matmul(&self, other: &RealMatrix) -> Result<RealMatrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidParameter("inner dimensions differ".into()));
        }
        let rows = self.rows;
        let mut data = vec![0.0; rows * other.cols];
        if rows > 0 {
            data.par_chunks_mut(rows).enumerate().for_each(|(j, out)| {
                for (k, &b) in other.column(j).iter().enumerate() {
                    if b != 0.0 {
                        for (o, a) in out.iter_mut().zip(self.column(k)) {
                            *o += a * b;
                        }
                    }
                }
            });
        }
        Ok(Self { rows, cols: other.cols, data })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (yi, a) in y.iter_mut().zip(self.column(j)) {
                    *yi += a * xj;
                }
            }
        }
        y
    }

    pub fn tr_matvec(&self, y: &[f64]) -> Vec<f64> {
        (0..self.cols).into_par_iter().map(|j| dot(self.column(j), y)).collect()
    }

    pub fn sub(&self, other: &RealMatrix) -> RealMatrix {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * a.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

const POWER_ITERATIONS: usize = 20;
const POWER_SEED: u64 = 0x5eed_1d5e_ed1d;

/// Spectral norm estimate of the block A[row0.., col0..] by power iteration on
/// A^T A with a fixed-seed start vector.
pub(crate) fn power_norm(a: &RealMatrix, row0: usize, col0: usize) -> f64 {
    let rows = a.rows().saturating_sub(row0);
    let cols = a.cols().saturating_sub(col0);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut x: Vec<f64> = (0..cols).map(|_| rng.random::<f64>() - 0.5).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut sigma = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let mut y = vec![0.0; rows];
        for (k, &xk) in x.iter().enumerate() {
            let col = &a.column(col0 + k)[row0..];
            for (yi, v) in y.iter_mut().zip(col) {
                *yi += v * xk;
            }
        }
        let z: Vec<f64> = (0..cols).into_par_iter().map(|k| dot(&a.column(col0 + k)[row0..], &y)).collect();
        let nz = norm2(&z);
        if nz == 0.0 {
            return 0.0;
        }
        sigma = nz.sqrt();
        x = z.into_iter().map(|v| v / nz).collect();
    }
    sigma
}

/// Householder least squares min ||A x - b||_2 for a tall full-column-rank A.
pub(crate) fn solve_least_squares(a: &RealMatrix, b: &[f64]) -> Vec<f64> {
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut rhs = b.to_vec();
    let mut diag = vec![0.0; n];
    for k in 0..n.min(m) {
        let col = &r.column(k)[k..];
        let alpha = norm2(col);
        if alpha == 0.0 {
            continue;
        }
        let alpha = if col[0] > 0.0 { -alpha } else { alpha };
        let mut v = col.to_vec();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        diag[k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k + 1..n {
            let c = &mut r.column_mut(j)[k..];
            let s = 2.0 * dot(&v, c) / vnorm2;
            c.iter_mut().zip(&v).for_each(|(ci, vi)| *ci -= s * vi);
        }
        let s = 2.0 * dot(&v, &rhs[k..]) / vnorm2;
        rhs[k..].iter_mut().zip(&v).for_each(|(ci, vi)| *ci -= s * vi);
    }
    let mut x = vec![0.0; n];
    for k in (0..n.min(m)).rev() {
        let mut acc = rhs[k];
        for j in k + 1..n {
            acc -= r.get(k, j) * x[j];
        }
        x[k] = if diag[k] != 0.0 { acc / diag[k] } else { 0.0 };
    }
    x
}
