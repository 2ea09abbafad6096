//! Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! The columns of a working copy are rotated pairwise until they are mutually
//! orthogonal; their norms are then the singular values. One-sided Jacobi is
//! slower than bidiagonalization on large inputs but recovers small singular
//! values to high relative accuracy, which matters for energy thresholds far
//! below machine epsilon times `σ₁`.

use super::matrix::{dot, norm2, Matrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// `a = left · diag(singular_values) · right_t`, thin form.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// n×z, orthonormal columns.
    pub left: Matrix,
    /// Non-increasing, length z = min(n, m).
    pub singular_values: Vec<f64>,
    /// z×m, orthonormal rows.
    pub right_t: Matrix,
}

impl SvdFactors {
    pub fn rank_count(&self) -> usize {
        self.singular_values.len()
    }

    /// `left · diag(σ) · right_t`.
    pub fn reconstruct(&self) -> Matrix {
        let (n, z) = self.left.shape();
        let m = self.right_t.cols();
        let mut out = Matrix::zeros(n, m);
        for i in 0..n {
            let orow = out.row_mut(i);
            for k in 0..z {
                let a = self.left[(i, k)] * self.singular_values[k];
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(self.right_t.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

pub fn svd(a: &Matrix) -> Result<SvdFactors> {
    if !a.is_finite() {
        return Err(Error::arg("svd input has non-finite entries"));
    }
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let f = svd_tall(&a.transpose())?;
        Ok(SvdFactors {
            left: f.right_t.transpose(),
            singular_values: f.singular_values,
            right_t: f.left.transpose(),
        })
    }
}

/// Keep the leading `r` singular triplets.
pub fn truncate(f: &SvdFactors, r: usize) -> Result<SvdFactors> {
    let z = f.singular_values.len();
    if r == 0 || r > z {
        return Err(Error::arg(format!("truncation rank {r} outside 1..={z}")));
    }
    Ok(SvdFactors {
        left: f.left.column_range(0, r),
        singular_values: f.singular_values[..r].to_vec(),
        right_t: f.right_t.top_rows(r),
    })
}

fn svd_tall(a: &Matrix) -> Result<SvdFactors> {
    let (n, m) = a.shape();
    // Column-major working storage: cols[j] is column j of A·V.
    let mut cols: Vec<Vec<f64>> = (0..m).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();

    let tol = f64::EPSILON * (n as f64).sqrt();
    let mut converged = false;
    let mut last_off = 0.0f64;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        last_off = 0.0;
        for p in 0..m {
            for q in (p + 1)..m {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                let off = gamma.abs() / (alpha * beta).sqrt();
                last_off = last_off.max(off);
                if off <= tol {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                norms[p] = dot(&cols[p], &cols[p]);
                norms[q] = dot(&cols[q], &cols[q]);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence {
            sweeps: MAX_SWEEPS,
            residual: last_off,
        });
    }

    let sigma: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..m).collect();
    // Stable sort keeps index order among equal values.
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let mut left_cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut singular_values = Vec::with_capacity(m);
    for &j in &order {
        let s = sigma[j];
        let mut u: Vec<f64> = if s > 0.0 {
            cols[j].iter().map(|x| x / s).collect()
        } else {
            vec![0.0; n]
        };
        // Re-orthogonalize: columns belonging to tiny singular values carry
        // rounding of order eps·σ₁/σⱼ.
        for prev in &left_cols {
            let d = dot(prev, &u);
            for (ui, pi) in u.iter_mut().zip(prev) {
                *ui -= d * pi;
            }
        }
        let nu = norm2(&u);
        if s > 0.0 && nu > 0.5 {
            u.iter_mut().for_each(|x| *x /= nu);
        } else {
            u = complete_basis(&left_cols, n);
        }
        left_cols.push(u);
        singular_values.push(s);
    }

    let left = Matrix::from_fn(n, m, |i, k| left_cols[k][i]);
    let right_t = Matrix::from_fn(m, m, |k, j| v[order[k]][j]);
    Ok(SvdFactors {
        left,
        singular_values,
        right_t,
    })
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let xa = *a;
        let yb = *b;
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// A unit vector orthogonal to every vector in `basis`, found by projecting
/// standard basis vectors.
fn complete_basis(basis: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..n {
        let mut u = vec![0.0; n];
        u[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let d = dot(b, &u);
                for (ui, bi) in u.iter_mut().zip(b) {
                    *ui -= d * bi;
                }
            }
        }
        let nu = norm2(&u);
        if nu > 0.5 {
            u.iter_mut().for_each(|x| *x /= nu);
            return u;
        }
        if best.as_ref().map_or(true, |(bn, _)| nu > *bn) {
            best = Some((nu, u));
        }
    }
    let (nu, mut u) = best.expect("n >= 1");
    u.iter_mut().for_each(|x| *x /= nu);
    u
}
