//! Full-batch training: Adam under a cyclic learning rate, with the PDE
//! coefficients re-solved by least squares at every iteration.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    build_theta, relative_error, residuals, solve_parameters, time_derivatives, DomainScales,
    LossWeights, PdeSpec,
};
use crate::sampler::SampleSet;
use crate::siren::{backward_batch, forward_batch, init_siren, Jet, JetAdjoint, ParamGrad, SirenNet};
use crate::siren::{DEFAULT_OMEGA0, DEFAULT_WIDTHS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Lower bound of the cycle; `0.1 · learning_rate` when unset.
    pub base_lr: Option<f64>,
    /// Upper bound of the cycle; `10 · learning_rate` when unset.
    pub max_lr: Option<f64>,
    pub step_size_up: usize,
    pub gamma: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub widths: Vec<usize>,
    pub omega0: f64,
    /// Random mini-batch per iteration; full batch when unset.
    pub batch_size: Option<usize>,
    pub divergence_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            base_lr: None,
            max_lr: None,
            step_size_up: 1000,
            gamma: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            max_iter: 1500,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            widths: DEFAULT_WIDTHS.to_vec(),
            omega0: DEFAULT_OMEGA0,
            batch_size: None,
            divergence_threshold: 1e8,
        }
    }
}

impl TrainConfig {
    /// Defaults with the iteration budget used for each preset.
    pub fn for_pde(name: &str) -> Self {
        let max_iter = if name == "kdv" { 1000 } else { 1500 };
        Self {
            max_iter,
            ..Self::default()
        }
    }

    pub fn base_lr(&self) -> f64 {
        self.base_lr.unwrap_or(0.1 * self.learning_rate)
    }

    pub fn max_lr(&self) -> f64 {
        self.max_lr.unwrap_or(10.0 * self.learning_rate)
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            mu1: self.mu1,
            mu2: self.mu2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr() > 0.0 && self.base_lr() < self.max_lr()) {
            return Err(Error::arg(format!(
                "need 0 < base_lr < max_lr, got {} and {}",
                self.base_lr(),
                self.max_lr()
            )));
        }
        if self.max_iter == 0 || self.step_size_up == 0 {
            return Err(Error::arg("max_iter and step_size_up must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::arg("gamma must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::arg("Adam betas must lie in [0, 1)"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::arg("batch_size must be positive"));
        }
        self.weights().validate()
    }
}

/// Triangular wave between `base_lr` and `max_lr` with half-period
/// `step_size_up`, amplitude damped by `gamma^iter`.
pub fn cyclic_lr(iter: usize, cfg: &TrainConfig) -> f64 {
    let step = cfg.step_size_up as f64;
    let it = iter as f64;
    let cycle = (1.0 + it / (2.0 * step)).floor();
    let x = (it / step - 2.0 * cycle + 1.0).abs();
    let (base, max) = (cfg.base_lr(), cfg.max_lr());
    base + (max - base) * (1.0 - x).max(0.0) * cfg.gamma.powf(it)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamState {
    pub fn new(len: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    /// One bias-corrected Adam update. `iteration` is only used to label a
    /// non-finite gradient.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, iteration: usize) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters, {} gradients, state of {}",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { iteration });
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= lr * mh / (vh.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Composite loss, its parts and parameter gradient at one network state.
#[derive(Debug, Clone)]
pub struct CompositeEval {
    pub mse: f64,
    pub deri: f64,
    pub total: f64,
    pub p_hat: Vec<f64>,
    pub jets: Vec<Jet>,
    pub grad: ParamGrad,
}

/// `mu1·mse + mu2·deri` on a batch, with `p̂` solved from the same jets and
/// held constant when differentiating.
pub fn composite_loss(
    net: &SirenNet,
    coords: &[(f64, f64)],
    values: &[f64],
    spec: &PdeSpec,
    scales: DomainScales,
    weights: LossWeights,
) -> Result<CompositeEval> {
    if coords.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} points but {} values",
            coords.len(),
            values.len()
        )));
    }
    let order = spec.max_x_order().max(1);
    let (jets, tape) = forward_batch(net, coords, order)?;
    let theta = build_theta(&jets, spec, scales)?;
    let u_t = time_derivatives(&jets, scales);
    let p_hat = solve_parameters(&theta, &u_t)?;
    let r = residuals(&u_t, &theta, &p_hat)?;

    let n = jets.len() as f64;
    let mse = jets
        .iter()
        .zip(values)
        .map(|(j, u)| (u - j.u).powi(2))
        .sum::<f64>()
        / n;
    let deri = r.iter().map(|v| v * v).sum::<f64>() / n;
    let total = weights.mu1 * mse + weights.mu2 * deri;

    let inv_x = [1.0, 1.0 / scales.s_x, scales.s_x.powi(-2), scales.s_x.powi(-3)];
    let adjoints: Vec<JetAdjoint> = jets
        .iter()
        .zip(values)
        .zip(&r)
        .map(|((jet, u), &ri)| {
            let d = scales.physical_derivs(jet);
            let w = 2.0 * weights.mu2 * ri / n;
            // ∂(Θ_i·p̂)/∂(physical ∂ᵏu)
            let mut dtheta = [0.0; 4];
            for (term, &p) in spec.terms().iter().zip(&p_hat) {
                for (k, slot) in dtheta.iter_mut().enumerate() {
                    *slot += p * term.partial(&d, k as u8);
                }
            }
            JetAdjoint {
                u: -2.0 * weights.mu1 * (u - jet.u) / n - w * dtheta[0],
                du_dt: w / scales.s_t,
                du_dx: -w * dtheta[1] * inv_x[1],
                d2u_dx2: -w * dtheta[2] * inv_x[2],
                d3u_dx3: -w * dtheta[3] * inv_x[3],
            }
        })
        .collect();
    let grad = backward_batch(net, &tape, &adjoints)?;
    Ok(CompositeEval {
        mse,
        deri,
        total,
        p_hat,
        jets,
        grad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub mse: f64,
    pub deri: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub term_names: Vec<String>,
    pub p_trajectory: Vec<Vec<f64>>,
    pub loss_history: Vec<LossRecord>,
    pub lr_history: Vec<f64>,
    pub final_p: Vec<f64>,
    pub rel_errors: Option<Vec<Option<f64>>>,
    pub wall_time: f64,
    pub iterations: usize,
    pub diverged: bool,
}

#[derive(Serialize)]
struct Summary<'a> {
    terms: &'a [String],
    final_p: &'a [f64],
    rel_errors: &'a Option<Vec<Option<f64>>>,
    final_loss: Option<&'a LossRecord>,
    iterations: usize,
    diverged: bool,
    wall_time_s: f64,
}

impl TrainResult {
    /// `iteration,lr,mse,deri,total,p1..pk`
    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["iteration", "lr", "mse", "deri", "total"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=self.term_names.len()).map(|i| format!("p{i}")));
        w.write_record(&header)?;
        for (i, (p, l)) in self.p_trajectory.iter().zip(&self.loss_history).enumerate() {
            let mut row = vec![
                i.to_string(),
                format!("{:.16e}", self.lr_history[i]),
                format!("{:.16e}", l.mse),
                format!("{:.16e}", l.deri),
                format!("{:.16e}", l.total),
            ];
            row.extend(p.iter().map(|v| format!("{v:.16e}")));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// JSON summary. Wall time is left out when `with_time` is false so the
    /// output is reproducible byte for byte.
    pub fn summary_json(&self, with_time: bool) -> Result<String> {
        let s = Summary {
            terms: &self.term_names,
            final_p: &self.final_p,
            rel_errors: &self.rel_errors,
            final_loss: self.loss_history.last(),
            iterations: self.iterations,
            diverged: self.diverged,
            wall_time_s: if with_time { self.wall_time } else { 0.0 },
        };
        Ok(serde_json::to_string_pretty(&s)?)
    }

    pub fn save(&self, trajectory: &Path, summary: &Path) -> Result<()> {
        let f = std::fs::File::create(trajectory).map_err(|e| Error::io(trajectory, e))?;
        self.write_trajectory_csv(std::io::BufWriter::new(f))?;
        std::fs::write(summary, self.summary_json(true)?).map_err(|e| Error::io(summary, e))
    }
}

/// Fresh network per the config's architecture and seed.
pub fn init_network(cfg: &TrainConfig) -> Result<SirenNet> {
    init_siren(&cfg.widths, cfg.omega0, cfg.seed)
}

/// Trains `net` on the samples, recording `p̂` and the losses before every
/// update. Stops early, flagged as diverged, when the loss leaves
/// `divergence_threshold` or turns non-finite.
pub fn train(
    net: &mut SirenNet,
    samples: &SampleSet,
    spec: &PdeSpec,
    scales: DomainScales,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::arg("no samples to train on"));
    }
    if samples.len() < spec.terms().len() {
        return Err(Error::arg(format!(
            "{} samples cannot determine {} coefficients",
            samples.len(),
            spec.terms().len()
        )));
    }
    let start = Instant::now();
    let coords = samples.coords();
    let values = samples.values();
    let mut adam = AdamState::new(net.num_params(), cfg.beta1, cfg.beta2, cfg.adam_eps);
    let mut batch_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_ba7c);

    let mut result = TrainResult {
        term_names: spec.term_names(),
        p_trajectory: Vec::with_capacity(cfg.max_iter),
        loss_history: Vec::with_capacity(cfg.max_iter),
        lr_history: Vec::with_capacity(cfg.max_iter),
        final_p: Vec::new(),
        rel_errors: None,
        wall_time: 0.0,
        iterations: 0,
        diverged: false,
    };

    for it in 0..cfg.max_iter {
        let lr = cyclic_lr(it, cfg);
        let eval = match cfg.batch_size {
            Some(b) if b < coords.len() => {
                let mut idx = index::sample(&mut batch_rng, coords.len(), b).into_vec();
                idx.sort_unstable();
                let c: Vec<_> = idx.iter().map(|&i| coords[i]).collect();
                let v: Vec<_> = idx.iter().map(|&i| values[i]).collect();
                composite_loss(net, &c, &v, spec, scales, cfg.weights())?
            }
            _ => composite_loss(net, &coords, &values, spec, scales, cfg.weights())?,
        };
        if !eval.total.is_finite() || eval.total.abs() > cfg.divergence_threshold {
            result.diverged = true;
            break;
        }
        result.p_trajectory.push(eval.p_hat.clone());
        result.loss_history.push(LossRecord {
            mse: eval.mse,
            deri: eval.deri,
            total: eval.total,
        });
        result.lr_history.push(lr);
        result.iterations = it + 1;
        adam.step(net.params_mut(), &eval.grad.0, lr, it)?;
    }

    result.final_p = result.p_trajectory.last().cloned().unwrap_or_default();
    if let (Some(truth), false) = (spec.true_p(), result.final_p.is_empty()) {
        result.rel_errors = Some(relative_error(truth, &result.final_p)?);
    }
    result.wall_time = start.elapsed().as_secs_f64();
    Ok(result)
}
