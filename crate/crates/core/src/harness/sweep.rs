use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::PdeSpec;
use crate::sampler::{random_sample, sample_size_grid, QdeimPlan, SampleSet, SamplerKind};
use crate::snapshot::SnapshotMatrix;
use crate::trainer::{init_network, train, TrainConfig, TrainResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub t_divs: Vec<usize>,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_count: usize,
    /// Random-baseline repetitions per sample size.
    pub repetitions: usize,
    /// Seeds of the random baseline derive from this one.
    pub base_seed: u64,
    /// Worker threads for independent runs.
    pub jobs: usize,
    pub squared_energy: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            t_divs: vec![1, 2, 3, 4],
            eps_min: 1e-10,
            eps_max: 1e-2,
            eps_count: 20,
            repetitions: 5,
            base_seed: 0,
            jobs: 1,
            squared_energy: false,
        }
    }
}

impl SweepConfig {
    /// Threshold range per preset: `[1e-13, 1e-4]` for Allen-Cahn,
    /// `[1e-10, 1e-2]` otherwise.
    pub fn for_pde(name: &str) -> Self {
        let (eps_min, eps_max) = match name {
            "allen-cahn" | "ac" => (1e-13, 1e-4),
            _ => (1e-10, 1e-2),
        };
        Self {
            eps_min,
            eps_max,
            ..Self::default()
        }
    }

    pub fn eps_values(&self) -> Result<Vec<f64>> {
        log_space(self.eps_min, self.eps_max, self.eps_count)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_divs.is_empty() || self.t_divs.contains(&0) {
            return Err(Error::arg("t_divs must be a non-empty list of positive counts"));
        }
        if self.repetitions == 0 || self.jobs == 0 {
            return Err(Error::arg("repetitions and jobs must be at least 1"));
        }
        self.eps_values().map(|_| ())
    }
}

/// `count` values equally spaced in log10 from `min` to `max` inclusive.
pub fn log_space(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && count >= 1) {
        return Err(Error::arg(format!(
            "log range needs 0 < min ≤ max and count ≥ 1, got [{min}, {max}] × {count}"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = (min.log10(), max.log10());
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                max
            } else if i == 0 {
                min
            } else {
                10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub sampler: SamplerKind,
    pub pde: String,
    pub t_div: Option<usize>,
    pub eps_thr: Option<f64>,
    pub size: Option<usize>,
    pub seed: Option<u64>,
    pub n_samples: usize,
    /// One entry per library term; `None` where the truth is zero or the
    /// run failed.
    pub rel_errors: Vec<Option<f64>>,
    pub final_p: Vec<f64>,
    pub wall_time_s: f64,
    pub diverged: bool,
    pub failure: Option<String>,
}

impl ExperimentRecord {
    fn from_run(
        sampler: SamplerKind,
        spec: &PdeSpec,
        key: RunKey,
        samples: Option<&SampleSet>,
        outcome: Result<TrainResult>,
        wall: f64,
    ) -> Self {
        let k = spec.terms().len();
        let mut rec = Self {
            sampler,
            pde: spec.name.clone(),
            t_div: key.t_div,
            eps_thr: key.eps_thr,
            size: key.size,
            seed: key.seed,
            n_samples: samples.map_or(0, SampleSet::len),
            rel_errors: vec![None; k],
            final_p: Vec::new(),
            wall_time_s: wall,
            diverged: false,
            failure: None,
        };
        match outcome {
            Ok(r) => {
                if let Some(e) = r.rel_errors {
                    rec.rel_errors = e;
                }
                rec.final_p = r.final_p;
                rec.diverged = r.diverged;
            }
            Err(e) => rec.failure = Some(e.to_string()),
        }
        rec
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none() && !self.diverged
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RunKey {
    t_div: Option<usize>,
    eps_thr: Option<f64>,
    size: Option<usize>,
    seed: Option<u64>,
}

/// Runs `tasks` on `jobs` threads; results come back in task order.
fn run_pool<T: Sync, R: Send>(tasks: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || tasks.len() <= 1 {
        return tasks.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(tasks.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let r = f(&tasks[i]);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.expect("every task ran"))
        .collect()
}

fn train_on(samples: &SampleSet, s: &SnapshotMatrix, spec: &PdeSpec, cfg: &TrainConfig) -> Result<TrainResult> {
    let mut net = init_network(cfg)?;
    train(&mut net, samples, spec, s.scales(), cfg)
}

/// Greedy samples then training for every `(t_div, eps)` pair, in config
/// order. Window SVDs are computed once per `t_div`.
pub fn sweep_greedy(
    s: &SnapshotMatrix,
    spec: &PdeSpec,
    sweep: &SweepConfig,
    train_cfg: &TrainConfig,
) -> Result<Vec<ExperimentRecord>> {
    sweep.validate()?;
    let eps = sweep.eps_values()?;
    let mut tasks: Vec<(RunKey, std::result::Result<SampleSet, String>)> = Vec::new();
    for &t_div in &sweep.t_divs {
        let plan = QdeimPlan::new(s, t_div);
        for &e in &eps {
            let key = RunKey {
                t_div: Some(t_div),
                eps_thr: Some(e),
                size: None,
                seed: None,
            };
            let samples = match &plan {
                Ok(p) => p.sample(e, sweep.squared_energy).map_err(|e| e.to_string()),
                Err(err) => Err(err.to_string()),
            };
            tasks.push((key, samples));
        }
    }
    Ok(run_pool(&tasks, sweep.jobs, |(key, samples)| {
        let start = Instant::now();
        match samples {
            Ok(set) => {
                let out = train_on(set, s, spec, train_cfg);
                ExperimentRecord::from_run(SamplerKind::Greedy, spec, *key, Some(set), out, start.elapsed().as_secs_f64())
            }
            Err(msg) => ExperimentRecord::from_run(
                SamplerKind::Greedy,
                spec,
                *key,
                None,
                Err(Error::arg(msg.clone())),
                0.0,
            ),
        }
    }))
}

/// Seed of repetition `rep` at sample size `size`.
pub fn baseline_seed(base: u64, size: usize, rep: usize) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((size as u64) << 20)
        .wrapping_add(rep as u64)
}

/// Random samples of every size in the 11-point grid over `[min_n, max_n]`,
/// `repetitions` times each, then training.
pub fn sweep_random(
    s: &SnapshotMatrix,
    spec: &PdeSpec,
    min_n: usize,
    max_n: usize,
    sweep: &SweepConfig,
    train_cfg: &TrainConfig,
) -> Result<Vec<ExperimentRecord>> {
    sweep.validate()?;
    let sizes = sample_size_grid(min_n, max_n)?;
    let tasks: Vec<RunKey> = sizes
        .iter()
        .flat_map(|&size| {
            (0..sweep.repetitions).map(move |rep| RunKey {
                t_div: None,
                eps_thr: None,
                size: Some(size),
                seed: Some(baseline_seed(sweep.base_seed, size, rep)),
            })
        })
        .collect();
    Ok(run_pool(&tasks, sweep.jobs, |key| {
        let start = Instant::now();
        let size = key.size.expect("size");
        let seed = key.seed.expect("seed");
        match random_sample(s, size, seed) {
            Ok(set) => {
                let cfg = TrainConfig {
                    seed: train_cfg.seed ^ seed,
                    ..train_cfg.clone()
                };
                let out = train_on(&set, s, spec, &cfg);
                ExperimentRecord::from_run(SamplerKind::Random, spec, *key, Some(&set), out, start.elapsed().as_secs_f64())
            }
            Err(e) => ExperimentRecord::from_run(SamplerKind::Random, spec, *key, None, Err(e), 0.0),
        }
    }))
}

/// Smallest and largest greedy sample counts over a sweep, evaluated without
/// training.
pub fn greedy_count_range(s: &SnapshotMatrix, sweep: &SweepConfig) -> Result<(usize, usize)> {
    let counts = greedy_counts(s, sweep)?;
    let min = counts.iter().map(|c| c.2).min().expect("non-empty sweep");
    let max = counts.iter().map(|c| c.2).max().expect("non-empty sweep");
    Ok((min, max))
}

/// `(t_div, eps, n_samples)` for every sweep pair.
pub fn greedy_counts(s: &SnapshotMatrix, sweep: &SweepConfig) -> Result<Vec<(usize, f64, usize)>> {
    sweep.validate()?;
    let eps = sweep.eps_values()?;
    let mut out = Vec::new();
    for &t_div in &sweep.t_divs {
        let plan = QdeimPlan::new(s, t_div)?;
        for &e in &eps {
            out.push((t_div, e, plan.sample(e, sweep.squared_energy)?.len()));
        }
    }
    Ok(out)
}

/// Mean relative error per coefficient for each baseline sample size, over
/// the repetitions where it is defined.
pub fn mean_errors_by_size(records: &[ExperimentRecord]) -> Vec<(usize, Vec<Option<f64>>)> {
    let mut sizes: Vec<usize> = records.iter().filter_map(|r| r.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|size| {
            let group: Vec<&ExperimentRecord> = records.iter().filter(|r| r.size == Some(size)).collect();
            let k = group.iter().map(|r| r.rel_errors.len()).max().unwrap_or(0);
            let means = (0..k)
                .map(|c| {
                    let vals: Vec<f64> = group
                        .iter()
                        .filter_map(|r| r.rel_errors.get(c).copied().flatten())
                        .collect();
                    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
                })
                .collect();
            (size, means)
        })
        .collect()
}
