//! Two-way Q-DEIM sample selection and the uniform random baseline.
//!
//! Per time window: thin SVD, rank from the energy criterion, then pivoted QR
//! on the leading left singular vectors (rows of `Z_rᵀ` index space) and on
//! the leading right singular vectors (rows of `Y_rᵀ` index time). The window
//! contributes every pairing of its spatial and temporal pivots, so a window
//! of rank `r` yields `r²` samples.

use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pivoted_qr, svd, Matrix, SvdFactors};
use crate::snapshot::{SnapshotMatrix, TimeWindow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QdeimConfig {
    pub t_div: usize,
    pub eps_thr: f64,
    /// Measure energy with `σ²` instead of `σ`.
    #[serde(default)]
    pub squared_energy: bool,
}

impl QdeimConfig {
    pub fn new(t_div: usize, eps_thr: f64) -> Result<Self> {
        let cfg = Self {
            t_div,
            eps_thr,
            squared_energy: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reference operating point for a preset: `(2, 1e-3)` for KdV,
    /// `(5, 1e-6)` for Burgers, `(2, 1e-8)` for Allen-Cahn.
    pub fn for_pde(name: &str) -> Option<Self> {
        let (t_div, eps_thr) = match name {
            "kdv" => (2, 1e-3),
            "burgers" => (5, 1e-6),
            "allen-cahn" | "ac" => (2, 1e-8),
            _ => return None,
        };
        Some(Self {
            t_div,
            eps_thr,
            squared_energy: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_div == 0 {
            return Err(Error::arg("t_div must be at least 1"));
        }
        if !(self.eps_thr > 0.0 && self.eps_thr < 1.0) {
            return Err(Error::arg(format!(
                "eps_thr must lie in (0, 1), got {}",
                self.eps_thr
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Greedy,
    Random,
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplerKind::Greedy => "greedy",
            SamplerKind::Random => "random",
        })
    }
}

/// One selected grid point; `t` and `x` are normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub window: usize,
    pub t_index: usize,
    pub x_index: usize,
    pub t: f64,
    pub x: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<SamplePoint>,
    /// Per window, spatial row indices in pivot order.
    pub spatial_pivots: Vec<Vec<usize>>,
    /// Per window, global column indices in pivot order.
    pub temporal_pivots: Vec<Vec<usize>>,
    pub source: SamplerKind,
    pub seed: Option<u64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Per-window ranks (greedy sets only).
    pub fn ranks(&self) -> Vec<usize> {
        self.spatial_pivots.iter().map(Vec::len).collect()
    }

    pub fn coords(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.t, p.x)).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.u).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["window", "t_index", "x_index", "t", "x", "u"])?;
        for p in &self.points {
            w.write_record([
                p.window.to_string(),
                p.t_index.to_string(),
                p.x_index.to_string(),
                format!("{:.16e}", p.t),
                format!("{:.16e}", p.x),
                format!("{:.16e}", p.u),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads a set written by [`SampleSet::write_csv`]. Pivot lists are not
    /// stored in the file and come back empty.
    pub fn read_csv(path: &Path, source: SamplerKind) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let points = rdr
            .deserialize::<SamplePoint>()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if points.is_empty() {
            return Err(Error::arg(format!("{} holds no samples", path.display())));
        }
        Ok(Self {
            points,
            spatial_pivots: Vec::new(),
            temporal_pivots: Vec::new(),
            source,
            seed: None,
        })
    }
}

/// Smallest `r` with `1 − Σ_{j≤r} σ_j / Σ σ < eps_thr`.
pub fn select_rank(sigma: &[f64], eps_thr: f64) -> Result<usize> {
    select_rank_with(sigma, eps_thr, false)
}

pub fn select_rank_with(sigma: &[f64], eps_thr: f64, squared: bool) -> Result<usize> {
    if sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(Error::arg("singular values must be finite and non-negative"));
    }
    let energy: Vec<f64> = if squared {
        sigma.iter().map(|s| s * s).collect()
    } else {
        sigma.to_vec()
    };
    let total: f64 = energy.iter().sum();
    if total <= 0.0 {
        return Err(Error::arg("all-zero singular spectrum"));
    }
    let mut acc = 0.0;
    for (r, e) in energy.iter().enumerate() {
        acc += e;
        if 1.0 - acc / total < eps_thr {
            return Ok(r + 1);
        }
    }
    Ok(sigma.len())
}

/// Spatial and temporal (window-local) pivots of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPivots {
    pub rank: usize,
    pub spatial: Vec<usize>,
    pub temporal: Vec<usize>,
}

/// Truncates `f` by the energy criterion and pivots both singular-vector
/// blocks.
pub fn pivots_from_svd(f: &SvdFactors, eps_thr: f64, squared: bool) -> Result<WindowPivots> {
    let r = select_rank_with(&f.singular_values, eps_thr, squared)?;
    let zt = Matrix::from_fn(r, f.left.rows(), |i, j| f.left[(j, i)]);
    let yt = f.right_t.top_rows(r);
    let spatial = pivoted_qr(&zt).pivots[..r].to_vec();
    let temporal = pivoted_qr(&yt).pivots[..r].to_vec();
    Ok(WindowPivots {
        rank: r,
        spatial,
        temporal,
    })
}

pub fn qdeim_window(u_window: &Matrix, eps_thr: f64) -> Result<WindowPivots> {
    pivots_from_svd(&svd(u_window)?, eps_thr, false)
}

/// Window SVDs of a snapshot for a fixed `t_div`, reusable across thresholds.
#[derive(Debug, Clone)]
pub struct QdeimPlan<'a> {
    snapshot: &'a SnapshotMatrix,
    windows: Vec<TimeWindow>,
    factors: Vec<SvdFactors>,
}

impl<'a> QdeimPlan<'a> {
    pub fn new(snapshot: &'a SnapshotMatrix, t_div: usize) -> Result<Self> {
        let windows = snapshot.subdivide_time(t_div)?;
        let factors = windows
            .iter()
            .map(|w| svd(&snapshot.window_values(w)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            snapshot,
            windows,
            factors,
        })
    }

    pub fn windows(&self) -> &[TimeWindow] {
        &self.windows
    }

    pub fn singular_values(&self, window: usize) -> &[f64] {
        &self.factors[window].singular_values
    }

    pub fn sample(&self, eps_thr: f64, squared: bool) -> Result<SampleSet> {
        let s = self.snapshot;
        let mut set = SampleSet {
            points: Vec::new(),
            spatial_pivots: Vec::with_capacity(self.windows.len()),
            temporal_pivots: Vec::with_capacity(self.windows.len()),
            source: SamplerKind::Greedy,
            seed: None,
        };
        for (w, f) in self.windows.iter().zip(&self.factors) {
            let piv = pivots_from_svd(f, eps_thr, squared)?;
            let cols: Vec<usize> = piv.temporal.iter().map(|c| c + w.col_start).collect();
            for &xi in &piv.spatial {
                for &tj in &cols {
                    set.points.push(SamplePoint {
                        window: w.index,
                        t_index: tj,
                        x_index: xi,
                        t: s.t_norm()[tj],
                        x: s.x_norm()[xi],
                        u: s.value(xi, tj),
                    });
                }
            }
            set.spatial_pivots.push(piv.spatial);
            set.temporal_pivots.push(cols);
        }
        Ok(set)
    }
}

pub fn qdeim_sample(s: &SnapshotMatrix, cfg: &QdeimConfig) -> Result<SampleSet> {
    cfg.validate()?;
    QdeimPlan::new(s, cfg.t_div)?.sample(cfg.eps_thr, cfg.squared_energy)
}

/// `size` distinct grid points drawn uniformly without replacement.
pub fn random_sample(s: &SnapshotMatrix, size: usize, seed: u64) -> Result<SampleSet> {
    let (n, m) = (s.n(), s.m());
    if size == 0 || size > n * m {
        return Err(Error::arg(format!(
            "random sample size must be in 1..={}, got {size}",
            n * m
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat = index::sample(&mut rng, n * m, size).into_vec();
    flat.sort_unstable();
    let points = flat
        .into_iter()
        .map(|k| {
            let (xi, tj) = (k / m, k % m);
            SamplePoint {
                window: 0,
                t_index: tj,
                x_index: xi,
                t: s.t_norm()[tj],
                x: s.x_norm()[xi],
                u: s.value(xi, tj),
            }
        })
        .collect();
    Ok(SampleSet {
        points,
        spatial_pivots: Vec::new(),
        temporal_pivots: Vec::new(),
        source: SamplerKind::Random,
        seed: Some(seed),
    })
}

/// Eleven linearly spaced sizes from `min_n` to `max_n` inclusive, rounded
/// to integers, duplicates removed.
pub fn sample_size_grid(min_n: usize, max_n: usize) -> Result<Vec<usize>> {
    if min_n >= max_n {
        return Err(Error::arg(format!(
            "sample-size grid needs min < max, got {min_n} >= {max_n}"
        )));
    }
    let span = max_n - min_n;
    let mut out: Vec<usize> = (0..=10)
        .map(|i| {
            let (q, rem) = (i * span / 10, i * span % 10);
            let r = match (2 * rem).cmp(&10) {
                std::cmp::Ordering::Less => q,
                std::cmp::Ordering::Greater => q + 1,
                std::cmp::Ordering::Equal => q + (q & 1),
            };
            min_n + r
        })
        .collect();
    out.dedup();
    Ok(out)
}
