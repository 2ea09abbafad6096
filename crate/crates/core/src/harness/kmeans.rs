use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_LLOYD_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub k: usize,
    pub n_init: usize,
    pub centroids: Vec<(f64, f64)>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia of every initialization, in the order they were run.
    pub init_inertias: Vec<f64>,
}

/// One Lloyd run from given centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub centroids: Vec<(f64, f64)>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub trace: Vec<f64>,
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

fn assign(points: &[(f64, f64)], centroids: &[(f64, f64)], labels: &mut [usize]) -> (bool, f64) {
    let mut changed = false;
    let mut inertia = 0.0;
    for (p, l) in points.iter().zip(labels.iter_mut()) {
        let (best, d) = centroids
            .iter()
            .enumerate()
            .map(|(c, &q)| (c, dist2(*p, q)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if *l != best {
            *l = best;
            changed = true;
        }
        inertia += d;
    }
    (changed, inertia)
}

/// Lloyd iterations until the assignment stops changing. An emptied cluster
/// is moved onto the point currently farthest from its own centroid.
pub fn lloyd(points: &[(f64, f64)], init: &[(f64, f64)]) -> LloydRun {
    let k = init.len();
    let mut centroids = init.to_vec();
    let mut labels = vec![usize::MAX; points.len()];
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD_ITERS {
        let (changed, inertia) = assign(points, &centroids, &mut labels);
        trace.push(inertia);
        if !changed {
            break;
        }
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l].0 += p.0;
            sums[l].1 += p.1;
            sums[l].2 += 1;
        }
        let mut taken = vec![false; points.len()];
        for c in 0..k {
            let (sx, sy, cnt) = sums[c];
            if cnt > 0 {
                centroids[c] = (sx / cnt as f64, sy / cnt as f64);
            }
        }
        for c in 0..k {
            if sums[c].2 > 0 {
                continue;
            }
            let far = points
                .iter()
                .enumerate()
                .filter(|(i, _)| !taken[*i])
                .map(|(i, p)| (i, dist2(*p, centroids[labels[i]])))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
                .0;
            taken[far] = true;
            centroids[c] = points[far];
        }
    }
    let inertia = *trace.last().unwrap_or(&0.0);
    LloydRun {
        centroids,
        labels,
        inertia,
        trace,
    }
}

/// Best of `n_init` Lloyd runs from `k` distinct random points each.
pub fn kmeans(points: &[(f64, f64)], k: usize, n_init: usize, seed: u64) -> Result<ClusterSummary> {
    kmeans_with(points, k, n_init, seed, false)
}

/// As [`kmeans`]; with `standardize` each axis is z-scored before clustering
/// and centroids are mapped back to raw units.
pub fn kmeans_with(
    points: &[(f64, f64)],
    k: usize,
    n_init: usize,
    seed: u64,
    standardize: bool,
) -> Result<ClusterSummary> {
    if k == 0 || k > points.len() {
        return Err(Error::arg(format!(
            "k = {k} must lie in 1..={} (number of points)",
            points.len()
        )));
    }
    if n_init == 0 {
        return Err(Error::arg("n_init must be at least 1"));
    }
    if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(Error::arg("non-finite point"));
    }
    let (shift, scale) = if standardize {
        axis_stats(points)
    } else {
        ((0.0, 0.0), (1.0, 1.0))
    };
    let work: Vec<(f64, f64)> = points
        .iter()
        .map(|p| ((p.0 - shift.0) / scale.0, (p.1 - shift.1) / scale.1))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<LloydRun> = None;
    let mut init_inertias = Vec::with_capacity(n_init);
    for _ in 0..n_init {
        let init: Vec<(f64, f64)> = index::sample(&mut rng, work.len(), k)
            .into_iter()
            .map(|i| work[i])
            .collect();
        let run = lloyd(&work, &init);
        init_inertias.push(run.inertia);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("n_init >= 1");
    let centroids = best
        .centroids
        .iter()
        .map(|c| (c.0 * scale.0 + shift.0, c.1 * scale.1 + shift.1))
        .collect();
    Ok(ClusterSummary {
        k,
        n_init,
        centroids,
        labels: best.labels,
        inertia: best.inertia,
        init_inertias,
    })
}

fn axis_stats(points: &[(f64, f64)]) -> ((f64, f64), (f64, f64)) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sx = (points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (points.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / n).sqrt();
    let guard = |s: f64| if s > 0.0 { s } else { 1.0 };
    ((mx, my), (guard(sx), guard(sy)))
}
