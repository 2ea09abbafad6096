//! Householder QR, with and without greedy column pivoting, and the
//! least-squares solve built on it.

use super::matrix::{dot, norm2, Matrix};
use crate::error::{Error, Result};

/// `q · r = a[:, pivots]`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// rows × k orthonormal columns, k = min(rows, cols).
    pub q: Matrix,
    /// k × cols upper triangular.
    pub r: Matrix,
    /// Column indices of `a` in selection order (a full permutation).
    pub pivots: Vec<usize>,
}

/// Column-pivoted QR. At every step the column with the largest residual
/// 2-norm (after projecting out the previously chosen columns) is selected;
/// exact ties go to the lowest original column index.
///
/// Residual norms are recomputed from the transformed columns at every step
/// instead of being downdated, so the selection is exactly the greedy one.
pub fn pivoted_qr(a: &Matrix) -> PivotedQr {
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut norms = vec![0.0; cols];

    for j in 0..cols {
        // residual norms over rows j.. (empty once j >= rows)
        norms[j..].iter_mut().for_each(|n| *n = 0.0);
        for i in j.min(rows)..rows {
            let row = w.row(i);
            for p in j..cols {
                norms[p] += row[p] * row[p];
            }
        }
        let mut best = j;
        for p in (j + 1)..cols {
            if norms[p] > norms[best] || (norms[p] == norms[best] && perm[p] < perm[best]) {
                best = p;
            }
        }
        if best != j {
            for i in 0..rows {
                let row = w.row_mut(i);
                row.swap(j, best);
            }
            perm.swap(j, best);
            norms.swap(j, best);
        }
        if j < k {
            let v = householder_column(&mut w, j);
            reflectors.push(v);
        }
    }

    let mut r = Matrix::zeros(k, cols);
    for i in 0..k {
        for jj in i..cols {
            r[(i, jj)] = w[(i, jj)];
        }
    }
    let q = form_q(&reflectors, rows, k);
    PivotedQr {
        q,
        r,
        pivots: perm,
    }
}

/// Annihilates column `j` below the diagonal of `w` in place and applies the
/// reflector to columns `j+1..`. Returns the reflector `v` (length rows - j,
/// scaled so that H = I - 2 v vᵀ / vᵀv).
fn householder_column(w: &mut Matrix, j: usize) -> Vec<f64> {
    let (rows, cols) = w.shape();
    let x: Vec<f64> = (j..rows).map(|i| w[(i, j)]).collect();
    let alpha = norm2(&x);
    let mut v = x;
    if alpha == 0.0 {
        return vec![0.0; rows - j];
    }
    let beta = if v[0] >= 0.0 { -alpha } else { alpha };
    v[0] -= beta;
    let vtv = dot(&v, &v);
    w[(j, j)] = beta;
    for i in (j + 1)..rows {
        w[(i, j)] = 0.0;
    }
    if vtv == 0.0 {
        return vec![0.0; rows - j];
    }
    for c in (j + 1)..cols {
        let mut s = 0.0;
        for (idx, i) in (j..rows).enumerate() {
            s += v[idx] * w[(i, c)];
        }
        let f = 2.0 * s / vtv;
        for (idx, i) in (j..rows).enumerate() {
            w[(i, c)] -= f * v[idx];
        }
    }
    v
}

fn apply_reflector(v: &[f64], offset: usize, y: &mut [f64]) {
    let vtv = dot(v, v);
    if vtv == 0.0 {
        return;
    }
    let s: f64 = v.iter().zip(&y[offset..]).map(|(a, b)| a * b).sum();
    let f = 2.0 * s / vtv;
    for (yi, vi) in y[offset..].iter_mut().zip(v) {
        *yi -= f * vi;
    }
}

fn form_q(reflectors: &[Vec<f64>], rows: usize, k: usize) -> Matrix {
    let mut q = Matrix::zeros(rows, k);
    for c in 0..k {
        let mut e = vec![0.0; rows];
        e[c] = 1.0;
        for (j, v) in reflectors.iter().enumerate().rev() {
            apply_reflector(v, j, &mut e);
        }
        for i in 0..rows {
            q[(i, c)] = e[i];
        }
    }
    q
}

/// Unpivoted Householder factorization of a tall matrix, kept in compact form.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    r: Matrix,
    reflectors: Vec<Vec<f64>>,
    rows: usize,
}

impl HouseholderQr {
    pub fn new(a: &Matrix) -> Result<Self> {
        let (rows, cols) = a.shape();
        if rows < cols {
            return Err(Error::arg(format!(
                "least squares needs rows >= cols, got {rows}x{cols}"
            )));
        }
        let mut w = a.clone();
        let reflectors = (0..cols).map(|j| householder_column(&mut w, j)).collect();
        let r = Matrix::from_fn(cols, cols, |i, j| if j >= i { w[(i, j)] } else { 0.0 });
        Ok(Self {
            r,
            reflectors,
            rows,
        })
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// First `cols` entries of `Qᵀ b`.
    pub fn qt_mul(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "rhs of length {} for {} rows",
                b.len(),
                self.rows
            )));
        }
        let mut y = b.to_vec();
        for (j, v) in self.reflectors.iter().enumerate() {
            apply_reflector(v, j, &mut y);
        }
        y.truncate(self.r.cols());
        Ok(y)
    }

    /// Fails if some |r[i,i]| < 1e-12·|r[0,0]|.
    pub fn check_rank(&self) -> Result<()> {
        let r00 = self.r[(0, 0)].abs();
        for i in 0..self.r.rows() {
            let d = self.r[(i, i)].abs();
            if d == 0.0 || d < 1e-12 * r00 {
                return Err(Error::RankDeficient { column: i, diag: d });
            }
        }
        Ok(())
    }

    /// `R⁻¹ Qᵀ b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_rank()?;
        let y = self.qt_mul(b)?;
        Ok(back_substitute(&self.r, &y))
    }
}

/// Solves the upper-triangular system `r x = y`.
pub fn back_substitute(r: &Matrix, y: &[f64]) -> Vec<f64> {
    let n = r.cols();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in (i + 1)..n {
            s -= r[(i, j)] * x[j];
        }
        x[i] = s / r[(i, i)];
    }
    x
}

/// Least-squares solution `argmin ‖a x − b‖₂ = R⁻¹ Qᵀ b`.
pub fn qr_least_squares(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    HouseholderQr::new(a)?.solve(b)
}
