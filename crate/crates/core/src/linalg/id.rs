use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{dot, norm2, power_norm, RealMatrix};
use crate::error::{Error, Result};

/// How the rank of an interpolative decomposition is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdMode {
    /// Keep exactly this many columns (fewer if the matrix rank is lower).
    Rank(usize),
    /// Smallest rank whose residual satisfies ||E||_2 <= eps ||A||_2.
    Tolerance(f64),
}

/// A ~= A[:, selected_columns] * interpolation.
#[derive(Debug, Clone)]
pub struct IdFactorization {
    /// Selected column indices in pivot order.
    pub selected_columns: Vec<usize>,
    /// r x n coefficients in the original column order; the columns listed in
    /// `selected_columns` form the identity.
    pub interpolation: RealMatrix,
    /// Spectral norm estimate of the residual E.
    pub residual_norm: f64,
    /// Spectral norm estimate of A.
    pub matrix_norm: f64,
    /// False when tolerance mode could not meet its target before running out of rank.
    pub tolerance_reached: bool,
}

impl IdFactorization {
    pub fn rank(&self) -> usize {
        self.selected_columns.len()
    }
}

/// Column interpolative decomposition by Householder QR with column pivoting.
///
/// Pivots maximize the remaining column norm; equal norms go to the lowest
/// original column index.
pub fn id_decompose(a: &RealMatrix, mode: IdMode) -> Result<IdFactorization> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let full = m.min(n);
    let max_steps = match mode {
        IdMode::Rank(r) if r == 0 || r > full => {
            return Err(Error::InvalidParameter(format!("rank {r} outside 1..={full}")));
        }
        IdMode::Rank(r) => r,
        IdMode::Tolerance(eps) if !(eps > 0.0) => {
            return Err(Error::InvalidParameter(format!("tolerance must be positive (got {eps})")));
        }
        IdMode::Tolerance(_) => full,
    };

    let matrix_norm = power_norm(a, 0, 0);
    if matrix_norm == 0.0 {
        return Err(Error::InvalidParameter("matrix is zero".into()));
    }
    let target = match mode {
        IdMode::Tolerance(eps) => eps * matrix_norm,
        IdMode::Rank(_) => 0.0,
    };
    let exhausted = 8.0 * f64::EPSILON * matrix_norm;

    let mut work = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = (0..n).map(|j| norm2(work.column(j))).collect();
    let mut ref_norms = norms.clone();
    let mut steps = 0;
    let mut reached = matches!(mode, IdMode::Rank(_));

    while steps < max_steps {
        let k = steps;
        if let IdMode::Tolerance(_) = mode {
            let trailing = norms[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if trailing <= target {
                reached = true;
                break;
            }
        }
        let mut p = k;
        for j in k + 1..n {
            if norms[j] > norms[p] || (norms[j] == norms[p] && perm[j] < perm[p]) {
                p = j;
            }
        }
        if norms[p] <= exhausted {
            break;
        }
        if p != k {
            let (ck, cp) = (k * m, p * m);
            let data = work.data_mut();
            for i in 0..m {
                data.swap(ck + i, cp + i);
            }
            perm.swap(k, p);
            norms.swap(k, p);
            ref_norms.swap(k, p);
        }

        let col = &work.column(k)[k..];
        let alpha = norm2(col);
        let alpha = if col[0] > 0.0 { -alpha } else { alpha };
        let mut v = col.to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        {
            let c = work.column_mut(k);
            c[k] = alpha;
            c[k + 1..].iter_mut().for_each(|x| *x = 0.0);
        }
        if vv > 0.0 && k + 1 < n {
            let tail = &mut work.data_mut()[(k + 1) * m..];
            tail.par_chunks_mut(m).for_each(|c| {
                let seg = &mut c[k..];
                let s = 2.0 * dot(&v, seg) / vv;
                seg.iter_mut().zip(&v).for_each(|(x, vi)| *x -= s * vi);
            });
        }
        for j in k + 1..n {
            if norms[j] == 0.0 {
                continue;
            }
            let rkj = work.get(k, j);
            let t = (1.0 - (rkj / norms[j]).powi(2)).max(0.0);
            let ratio = norms[j] / ref_norms[j];
            if t * ratio * ratio <= f64::EPSILON.sqrt() {
                norms[j] = if k + 1 < m { norm2(&work.column(j)[k + 1..]) } else { 0.0 };
                ref_norms[j] = norms[j];
            } else {
                norms[j] *= t.sqrt();
            }
        }
        steps += 1;
    }
    if let IdMode::Tolerance(_) = mode {
        if !reached && steps == full {
            let trailing = norms[full..].iter().map(|v| v * v).sum::<f64>().sqrt();
            reached = trailing <= target || m <= full;
        }
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("matrix is numerically zero".into()));
    }

    let rank = match mode {
        IdMode::Tolerance(_) if reached => {
            // trailing spectral norms are nonincreasing in the rank
            let (mut lo, mut hi) = (1, steps);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if power_norm(&work, mid, mid) <= target {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            lo
        }
        _ => steps,
    };
    let residual_norm = power_norm(&work, rank, rank);

    // T = R11^-1 R12, column by column
    let trailing: Vec<Vec<f64>> = (rank..n)
        .into_par_iter()
        .map(|j| {
            let mut x: Vec<f64> = work.column(j)[..rank].to_vec();
            for i in (0..rank).rev() {
                let mut acc = x[i];
                for l in i + 1..rank {
                    acc -= work.get(i, l) * x[l];
                }
                x[i] = acc / work.get(i, i);
            }
            x
        })
        .collect();
    let mut interpolation = RealMatrix::zeros(rank, n);
    for (k, &orig) in perm[..rank].iter().enumerate() {
        interpolation.set(k, orig, 1.0);
    }
    for (offset, coeffs) in trailing.iter().enumerate() {
        let orig = perm[rank + offset];
        for (i, &c) in coeffs.iter().enumerate() {
            interpolation.set(i, orig, c);
        }
    }

    Ok(IdFactorization {
        selected_columns: perm[..rank].to_vec(),
        interpolation,
        residual_norm,
        matrix_norm,
        tolerance_reached: reached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_outer_product() {
        let u = [1.0, -2.0, 0.5, 3.0];
        let v = [2.0, 1.0, -1.0];
        let a = RealMatrix::from_fn(4, 3, |i, j| u[i] * v[j]);
        let id = id_decompose(&a, IdMode::Rank(1)).unwrap();
        assert_eq!(id.rank(), 1);
        assert!(id.residual_norm < 1e-13);
        let approx = a.select_columns(&id.selected_columns).matmul(&id.interpolation).unwrap();
        assert!(approx.sub(&a).frobenius_norm() < 1e-13);
    }

    #[test]
    fn identity_full_rank() {
        let a = RealMatrix::from_fn(5, 5, |i, j| if i == j { 1.0 } else { 0.0 });
        let id = id_decompose(&a, IdMode::Rank(5)).unwrap();
        assert_eq!(id.selected_columns, vec![0, 1, 2, 3, 4]);
        assert_eq!(id.residual_norm, 0.0);
        for k in 0..5 {
            for j in 0..5 {
                let expect = if id.selected_columns[k] == j { 1.0 } else { 0.0 };
                assert_eq!(id.interpolation.get(k, j), expect);
            }
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let a = RealMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.0 });
        let id = id_decompose(&a, IdMode::Rank(1)).unwrap();
        assert_eq!(id.selected_columns, vec![0]);
    }

    #[test]
    fn tolerance_mode_finds_exact_rank() {
        let a = RealMatrix::from_fn(30, 20, |i, j| {
            let (x, y) = (i as f64 / 29.0, j as f64 / 19.0);
            1.0 + x * y + (x * x) * (y * y)
        });
        let id = id_decompose(&a, IdMode::Tolerance(1e-10)).unwrap();
        assert_eq!(id.rank(), 3);
        assert!(id.tolerance_reached);
        assert!(id.residual_norm <= 1e-10 * id.matrix_norm);
    }

    #[test]
    fn rejects_bad_modes() {
        let a = RealMatrix::from_fn(3, 3, |i, j| (i + j) as f64);
        assert!(id_decompose(&a, IdMode::Rank(0)).is_err());
        assert!(id_decompose(&a, IdMode::Rank(4)).is_err());
        assert!(id_decompose(&a, IdMode::Tolerance(0.0)).is_err());
        assert!(id_decompose(&RealMatrix::zeros(3, 3), IdMode::Rank(1)).is_err());
    }
}
