//! Synthetic snapshot generation on a periodic grid.
//!
//! Pseudo-spectral method of lines: linear single-factor terms `p·∂ᵏu` are
//! diagonal in Fourier space and handled exactly by an integrating factor,
//! every other term is evaluated in physical space and dealiased with the
//! 2/3 rule. Time stepping is Dormand–Prince 5(4) in Lawson form
//! (`û = e^{Lτ}v`), adaptive by default, landing exactly on output times.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{FeatureTerm, PdeSpec};
use crate::linalg::Matrix;
use crate::snapshot::SnapshotMatrix;

const BLOW_UP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialCondition {
    Zero,
    /// `amplitude · exp(−((x − center)/width)²)`
    Gaussian { center: f64, width: f64, amplitude: f64 },
    /// Sum of KdV solitons `(c/2)·sech²(√c/2·(x − a))`.
    TwoSoliton { c1: f64, a1: f64, c2: f64, a2: f64 },
    /// `x² cos(πx)`
    AllenCahn,
    /// `amplitude · sin(2π·mode·(x − x_min)/L)`
    Sine { mode: u32, amplitude: f64 },
    /// Random band-limited field from the generator seed.
    RandomModes { modes: u32, amplitude: f64 },
}

impl InitialCondition {
    pub const NAMES: [&'static str; 6] = [
        "zero",
        "gaussian",
        "two-soliton",
        "allen-cahn",
        "sine",
        "random-modes",
    ];

    /// Named condition with default parameters.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "zero" => Self::Zero,
            "gaussian" => Self::Gaussian {
                center: -2.0,
                width: 1.0,
                amplitude: 1.0,
            },
            "two-soliton" => Self::TwoSoliton {
                c1: 1.0,
                a1: -15.0,
                c2: 0.5,
                a2: 5.0,
            },
            "allen-cahn" => Self::AllenCahn,
            "sine" => Self::Sine {
                mode: 1,
                amplitude: 1.0,
            },
            "random-modes" => Self::RandomModes {
                modes: 4,
                amplitude: 1.0,
            },
            other => {
                return Err(Error::arg(format!(
                    "unknown initial condition '{other}' (known: {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }

    fn evaluate(&self, x: &[f64], x_min: f64, len: f64, seed: u64) -> Vec<f64> {
        match *self {
            Self::Zero => vec![0.0; x.len()],
            Self::Gaussian {
                center,
                width,
                amplitude,
            } => x
                .iter()
                .map(|v| amplitude * (-((v - center) / width).powi(2)).exp())
                .collect(),
            Self::TwoSoliton { c1, a1, c2, a2 } => x
                .iter()
                .map(|&v| soliton(v, c1, a1, len) + soliton(v, c2, a2, len))
                .collect(),
            Self::AllenCahn => x.iter().map(|v| v * v * (PI * v).cos()).collect(),
            Self::Sine { mode, amplitude } => x
                .iter()
                .map(|v| amplitude * (2.0 * PI * mode as f64 * (v - x_min) / len).sin())
                .collect(),
            Self::RandomModes { modes, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coeffs: Vec<(f64, f64)> = (1..=modes)
                    .map(|k| {
                        let s = amplitude / k as f64;
                        (rng.gen_range(-s..s), rng.gen_range(-s..s))
                    })
                    .collect();
                x.iter()
                    .map(|v| {
                        let th = 2.0 * PI * (v - x_min) / len;
                        coeffs
                            .iter()
                            .enumerate()
                            .map(|(k, (a, b))| {
                                let kt = (k + 1) as f64 * th;
                                a * kt.cos() + b * kt.sin()
                            })
                            .sum()
                    })
                    .collect()
            }
        }
    }
}

/// Soliton centred at `a`, summed over the neighbouring periodic images.
fn soliton(x: f64, c: f64, a: f64, len: f64) -> f64 {
    let k = c.sqrt() / 2.0;
    (-1..=1)
        .map(|w| {
            let s = 1.0 / (k * (x - a + w as f64 * len)).cosh();
            0.5 * c * s * s
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Stepping {
    Adaptive { rtol: f64, atol: f64 },
    /// Fixed step, shortened uniformly to land on every output time.
    Fixed { dt: f64 },
}

impl Default for Stepping {
    fn default() -> Self {
        Stepping::Adaptive {
            rtol: 1e-9,
            atol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n: usize,
    pub m: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub t_max: f64,
    pub init: InitialCondition,
    #[serde(default)]
    pub stepping: Stepping,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorConfig {
    /// Grid, domain and initial condition for a preset PDE name.
    pub fn preset(pde: &str) -> Result<Self> {
        let (n, m, x_min, x_max, t_max, init) = match pde {
            "kdv" => (512, 201, -30.0, 30.0, 20.0, "two-soliton"),
            "burgers" => (256, 101, -8.0, 8.0, 10.0, "gaussian"),
            "allen-cahn" | "ac" => (512, 201, -1.0, 1.0, 1.0, "allen-cahn"),
            other => {
                return Err(Error::arg(format!(
                    "no generator preset for '{other}' (known: kdv, burgers, allen-cahn)"
                )))
            }
        };
        Ok(Self {
            n,
            m,
            x_min,
            x_max,
            t_max,
            init: InitialCondition::by_name(init)?,
            stepping: Stepping::default(),
            seed: 0,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.n < 4 || self.m < 2 {
            return Err(Error::arg(format!(
                "grid {}×{} too small (need n ≥ 4, m ≥ 2)",
                self.n, self.m
            )));
        }
        if !(self.x_max > self.x_min && self.t_max > 0.0) {
            return Err(Error::arg("need x_max > x_min and t_max > 0"));
        }
        match self.stepping {
            Stepping::Adaptive { rtol, atol } if !(rtol > 0.0 && atol > 0.0) => {
                Err(Error::arg("tolerances must be positive"))
            }
            Stepping::Fixed { dt } if !(dt > 0.0) => Err(Error::arg("dt must be positive")),
            _ => Ok(()),
        }
    }
}

// Dormand–Prince 5(4)
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Right-hand side split `∂ₜû = L ⊙ û + N̂(û)`.
struct SpectralRhs {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    linear: Vec<Complex64>,
    /// `(iκ)^k` per order, odd orders zeroed at Nyquist.
    deriv: Vec<Vec<Complex64>>,
    nonlinear: Vec<(f64, FeatureTerm)>,
    keep: Vec<bool>,
}

impl SpectralRhs {
    fn new(spec: &PdeSpec, p: &[f64], n: usize, len: f64) -> Self {
        let mut planner = FftPlanner::new();
        let kappa: Vec<f64> = (0..n)
            .map(|j| {
                let idx = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * idx / len
            })
            .collect();
        let nyquist = |j: usize| n % 2 == 0 && j == n / 2;
        let deriv: Vec<Vec<Complex64>> = (0..=3u32)
            .map(|k| {
                (0..n)
                    .map(|j| {
                        if k % 2 == 1 && nyquist(j) {
                            Complex64::new(0.0, 0.0)
                        } else {
                            Complex64::new(0.0, kappa[j]).powu(k)
                        }
                    })
                    .collect()
            })
            .collect();
        let mut linear = vec![Complex64::new(0.0, 0.0); n];
        let mut nonlinear = Vec::new();
        for (term, &coef) in spec.terms().iter().zip(p) {
            match term.linear_order() {
                Some(k) => {
                    for (l, d) in linear.iter_mut().zip(&deriv[k as usize]) {
                        *l += coef * d;
                    }
                }
                None => nonlinear.push((coef, term.clone())),
            }
        }
        let keep = (0..n)
            .map(|j| {
                let a = if j <= n / 2 { j } else { n - j };
                3 * a <= n
            })
            .collect();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            linear,
            deriv,
            nonlinear,
            keep,
        }
    }

    fn to_physical(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut buf = spec.to_vec();
        self.inv.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * s).collect()
    }

    fn to_spectral(&self, phys: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = phys.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    fn nonlinear(&self, uhat: &[Complex64]) -> Vec<Complex64> {
        if self.nonlinear.is_empty() {
            return vec![Complex64::new(0.0, 0.0); self.n];
        }
        let max_order = self
            .nonlinear
            .iter()
            .map(|(_, t)| t.max_order())
            .max()
            .unwrap_or(0) as usize;
        let fields: Vec<Vec<f64>> = (0..=max_order)
            .map(|k| {
                let d: Vec<Complex64> = uhat.iter().zip(&self.deriv[k]).map(|(a, b)| a * b).collect();
                self.to_physical(&d)
            })
            .collect();
        let mut prod = vec![0.0; self.n];
        let mut d = [0.0; 4];
        for (i, out) in prod.iter_mut().enumerate() {
            for (k, f) in fields.iter().enumerate() {
                d[k] = f[i];
            }
            *out = self.nonlinear.iter().map(|(c, t)| c * t.value(&d)).sum();
        }
        let mut nh = self.to_spectral(&prod);
        for (v, &k) in nh.iter_mut().zip(&self.keep) {
            if !k {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        nh
    }

    fn expo(&self, tau: f64) -> Vec<Complex64> {
        self.linear.iter().map(|l| (l * tau).exp()).collect()
    }

    /// One Lawson–DP5 step; returns the 5th-order state and the physical-space
    /// difference to the embedded 4th-order state.
    fn step(&self, uhat: &[Complex64], h: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.n;
        let mut nl: Vec<Vec<Complex64>> = Vec::with_capacity(7);
        for i in 0..7 {
            let stage = if i == 0 {
                uhat.to_vec()
            } else {
                let mut s: Vec<Complex64> = uhat
                    .iter()
                    .zip(self.expo(C[i] * h))
                    .map(|(u, e)| u * e)
                    .collect();
                for (j, nj) in nl.iter().enumerate().take(i) {
                    let a = A[i][j];
                    if a == 0.0 {
                        continue;
                    }
                    let e = self.expo((C[i] - C[j]) * h);
                    for q in 0..n {
                        s[q] += h * a * e[q] * nj[q];
                    }
                }
                s
            };
            if i == 6 {
                // FSAL: stage 7 is the 5th-order solution itself
                let n7 = self.nonlinear(&stage);
                let mut err = vec![Complex64::new(0.0, 0.0); n];
                for (j, nj) in nl.iter().enumerate() {
                    let e = self.expo((1.0 - C[j]) * h);
                    let w = B5[j] - B4[j];
                    for q in 0..n {
                        err[q] += h * w * e[q] * nj[q];
                    }
                }
                for q in 0..n {
                    err[q] -= h * B4[6] * n7[q];
                }
                return (stage, err);
            }
            nl.push(self.nonlinear(&stage));
        }
        unreachable!()
    }
}

fn check_blow_up(u: &[f64], time: f64) -> Result<()> {
    if u.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
        return Err(Error::BlowUp { time });
    }
    Ok(())
}

/// Integrates `∂u/∂t = Σ p_i·term_i(u)` with the library's true coefficients.
pub fn generate_synthetic(spec: &PdeSpec, cfg: &GeneratorConfig) -> Result<SnapshotMatrix> {
    cfg.validate()?;
    let p = spec.true_p().ok_or_else(|| {
        Error::arg(format!(
            "spec '{}' has no true coefficients to integrate with",
            spec.name
        ))
    })?;
    let (n, m) = (cfg.n, cfg.m);
    let len = cfg.x_max - cfg.x_min;
    let x: Vec<f64> = (0..n).map(|j| cfg.x_min + j as f64 * len / n as f64).collect();
    let t: Vec<f64> = (0..m).map(|j| cfg.t_max * j as f64 / (m - 1) as f64).collect();

    let rhs = SpectralRhs::new(spec, p, n, len);
    let u0 = cfg.init.evaluate(&x, cfg.x_min, len, cfg.seed);
    check_blow_up(&u0, 0.0)?;
    let mut uhat = rhs.to_spectral(&u0);
    let mut columns = vec![u0];

    let mut h = match cfg.stepping {
        Stepping::Adaptive { .. } => (t[1] - t[0]).min(1e-3),
        Stepping::Fixed { dt } => dt,
    };
    let mut now = 0.0;
    for &target in &t[1..] {
        match cfg.stepping {
            Stepping::Fixed { dt } => {
                let span = target - now;
                let steps = (span / dt).ceil().max(1.0) as usize;
                let hh = span / steps as f64;
                for s in 0..steps {
                    let (next, _) = rhs.step(&uhat, hh);
                    uhat = next;
                    let time = now + (s + 1) as f64 * hh;
                    check_blow_up(&rhs.to_physical(&uhat), time)?;
                }
                now = target;
            }
            Stepping::Adaptive { rtol, atol } => {
                let mut current = rhs.to_physical(&uhat);
                while now < target {
                    let last = target - now <= h * (1.0 + 1e-12);
                    let hh = if last { target - now } else { h };
                    let (next, err_hat) = rhs.step(&uhat, hh);
                    let cand = rhs.to_physical(&next);
                    let err_phys = rhs.to_physical(&err_hat);
                    let err = (err_phys
                        .iter()
                        .zip(&current)
                        .zip(&cand)
                        .map(|((e, a), b)| {
                            let sc = atol + rtol * a.abs().max(b.abs());
                            (e / sc).powi(2)
                        })
                        .sum::<f64>()
                        / n as f64)
                        .sqrt();
                    if !err.is_finite() {
                        if hh < 1e-14 * cfg.t_max.max(1.0) {
                            return Err(Error::BlowUp { time: now });
                        }
                        h = hh * 0.2;
                        continue;
                    }
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if err <= 1.0 {
                        check_blow_up(&cand, now + hh)?;
                        now = if last { target } else { now + hh };
                        uhat = next;
                        current = cand;
                        // a short landing step says nothing about the step size
                        if !last || hh >= h {
                            h = hh * factor;
                        }
                    } else {
                        if hh < 1e-14 * cfg.t_max.max(1.0) {
                            return Err(Error::BlowUp { time: now });
                        }
                        h = hh * factor.min(1.0);
                    }
                }
            }
        }
        columns.push(rhs.to_physical(&uhat));
    }

    let u = Matrix::from_fn(n, m, |i, j| columns[j][i]);
    SnapshotMatrix::new(spec.name.clone(), x, t, u)
}
