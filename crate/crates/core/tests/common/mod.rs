//! Independent reference computations shared by the integration suites.
//! Nothing here calls into the code paths it is used to check.
#![allow(dead_code)]

use qdeim_pinn::linalg::Matrix;
use qdeim_pinn::siren::{init_siren, SirenNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    Matrix::from_fn(rows, cols, |_, _| r.gen_range(-1.0..1.0))
}

/// Eigenvalues of a symmetric matrix by the cyclic two-sided Jacobi method.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub fn gram(a: &Matrix) -> Vec<Vec<f64>> {
    let (n, m) = a.shape();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| (0..n).map(|k| a[(k, i)] * a[(k, j)]).sum())
                .collect()
        })
        .collect()
}

/// Greedy column selection by explicit Gram-Schmidt projections: at each step
/// the column with the largest residual norm wins, lowest index on ties.
pub fn greedy_projection_pivots(a: &Matrix, count: usize) -> Vec<usize> {
    let (rows, cols) = a.shape();
    let columns: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| a[(i, j)]).collect())
        .collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut chosen = Vec::new();
    for _ in 0..count {
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in columns.iter().enumerate() {
            if chosen.contains(&j) {
                continue;
            }
            let mut r = c.clone();
            for b in &basis {
                let d: f64 = b.iter().zip(&r).map(|(x, y)| x * y).sum();
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= d * bi;
                }
            }
            let norm: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if best.map_or(true, |(_, bn)| norm > bn) {
                best = Some((j, norm));
            }
        }
        let (j, _) = best.unwrap();
        chosen.push(j);
        let mut r = columns[j].clone();
        for _ in 0..2 {
            for b in &basis {
                let d: f64 = b.iter().zip(&r).map(|(x, y)| x * y).sum();
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= d * bi;
                }
            }
        }
        let norm: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            basis.push(r.iter().map(|x| x / norm).collect());
        }
    }
    chosen
}

/// Normal-equations solve `(aᵀa)⁻¹ aᵀ b` for exactly three unknowns using the
/// explicit cofactor inverse.
pub fn normal_equations_3(a: &Matrix, b: &[f64]) -> [f64; 3] {
    assert_eq!(a.cols(), 3);
    let g = gram(a);
    let atb: Vec<f64> = (0..3)
        .map(|j| (0..a.rows()).map(|i| a[(i, j)] * b[i]).sum())
        .collect();
    let det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
        - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    let cof = |i: usize, j: usize| {
        let r: Vec<usize> = (0..3).filter(|&k| k != i).collect();
        let c: Vec<usize> = (0..3).filter(|&k| k != j).collect();
        let minor = g[r[0]][c[0]] * g[r[1]][c[1]] - g[r[0]][c[1]] * g[r[1]][c[0]];
        if (i + j) % 2 == 0 {
            minor
        } else {
            -minor
        }
    };
    let mut x = [0.0; 3];
    for (i, xi) in x.iter_mut().enumerate() {
        // inverse[i][j] = cof(j, i) / det
        *xi = (0..3).map(|j| cof(j, i) / det * atb[j]).sum();
    }
    x
}

/// Frobenius norm of `a - b·c` computed entry by entry.
pub fn product_error(a: &Matrix, b: &Matrix, c: &Matrix) -> f64 {
    let mut s = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let p: f64 = (0..b.cols()).map(|k| b[(i, k)] * c[(k, j)]).sum();
            s += (a[(i, j)] - p).powi(2);
        }
    }
    s.sqrt()
}

/// Lloyd inertia of a labelling: sum of squared distances to cluster means.
pub fn partition_inertia(points: &[(f64, f64)], labels: &[usize], k: usize) -> f64 {
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &l) in points.iter().zip(labels) {
        sums[l].0 += p.0;
        sums[l].1 += p.1;
        sums[l].2 += 1;
    }
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| {
            let (sx, sy, c) = sums[l];
            let (mx, my) = (sx / c as f64, sy / c as f64);
            (p.0 - mx).powi(2) + (p.1 - my).powi(2)
        })
        .sum()
}

/// Network with random (non-zero) biases so every code path is exercised.
pub fn random_net(widths: &[usize], omega0: f64, seed: u64) -> SirenNet {
    let mut net = init_siren(widths, omega0, seed).unwrap();
    let mut r = rng(seed ^ 0xb1a5);
    for l in 0..net.num_layers() {
        let (_, b) = net.layer_ranges(l);
        for i in b {
            net.params_mut()[i] = r.gen_range(-0.5..0.5);
        }
    }
    net
}

/// Fourth-order central difference with Richardson extrapolation.
pub fn richardson(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs() + 1e-8)
}

