//! Feature libraries, the least-squares coefficient solve and the losses that
//! drive training.
//!
//! Network jets are taken with respect to normalized inputs. [`build_theta`]
//! and [`time_derivatives`] rescale them to physical coordinates so that the
//! recovered coefficients refer to the original PDE.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{qr_least_squares, Matrix};
use crate::siren::Jet;

/// Highest spatial derivative order a feature may use.
pub const MAX_ORDER: u8 = 3;

/// One factor `(∂ᵏu/∂xᵏ)^power` of a feature term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub order: u8,
    pub power: u32,
}

/// A product of factors, e.g. `u·u_x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureTerm {
    factors: Vec<Factor>,
}

impl FeatureTerm {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::arg("feature term needs at least one factor"));
        }
        for f in &factors {
            if f.order > MAX_ORDER {
                return Err(Error::arg(format!(
                    "derivative order {} exceeds {MAX_ORDER}",
                    f.order
                )));
            }
            if f.power == 0 {
                return Err(Error::arg("factor power must be at least 1"));
            }
        }
        Ok(Self { factors })
    }

    /// Shorthand from `(order, power)` pairs.
    pub fn from_pairs(pairs: &[(u8, u32)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(order, power)| Factor { order, power })
                .collect(),
        )
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn max_order(&self) -> u8 {
        self.factors.iter().map(|f| f.order).max().unwrap_or(0)
    }

    /// A single factor of power one: the term is linear in `u`.
    pub fn linear_order(&self) -> Option<u8> {
        match self.factors.as_slice() {
            [f] if f.power == 1 => Some(f.order),
            _ => None,
        }
    }

    /// Value given `derivs[k] = ∂ᵏu/∂xᵏ`.
    pub fn value(&self, derivs: &[f64; 4]) -> f64 {
        self.factors
            .iter()
            .map(|f| derivs[f.order as usize].powi(f.power as i32))
            .product()
    }

    /// `∂ value / ∂ derivs[k]`.
    pub fn partial(&self, derivs: &[f64; 4], k: u8) -> f64 {
        let mut total = 0.0;
        for (i, f) in self.factors.iter().enumerate() {
            if f.order != k {
                continue;
            }
            let d = derivs[k as usize];
            let mut p = f.power as f64 * d.powi(f.power as i32 - 1);
            for (j, g) in self.factors.iter().enumerate() {
                if j != i {
                    p *= derivs[g.order as usize].powi(g.power as i32);
                }
            }
            total += p;
        }
        total
    }
}

impl fmt::Display for FeatureTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            match factor.order {
                0 => write!(f, "u")?,
                k => write!(f, "u_{}", "x".repeat(k as usize))?,
            }
            if factor.power > 1 {
                write!(f, "^{}", factor.power)?;
            }
        }
        Ok(())
    }
}

/// A named right-hand side `f_p = Σ p_i · term_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeSpec {
    pub name: String,
    terms: Vec<FeatureTerm>,
    #[serde(default)]
    true_p: Option<Vec<f64>>,
}

impl PdeSpec {
    pub const PRESETS: [&'static str; 3] = ["allen-cahn", "burgers", "kdv"];

    pub fn new(
        name: impl Into<String>,
        terms: Vec<FeatureTerm>,
        true_p: Option<Vec<f64>>,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            terms,
            true_p,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::arg("pde spec has no terms"));
        }
        for t in &self.terms {
            FeatureTerm::new(t.factors.clone())?;
        }
        if let Some(p) = &self.true_p {
            if p.len() != self.terms.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} true coefficients for {} terms",
                    p.len(),
                    self.terms.len()
                )));
            }
        }
        Ok(())
    }

    /// `u_t = 5u − 5u³ + 0.0001 u_xx`
    pub fn allen_cahn() -> Self {
        Self::new(
            "allen-cahn",
            vec![
                FeatureTerm::from_pairs(&[(0, 1)]).unwrap(),
                FeatureTerm::from_pairs(&[(0, 3)]).unwrap(),
                FeatureTerm::from_pairs(&[(2, 1)]).unwrap(),
            ],
            Some(vec![5.0, -5.0, 1e-4]),
        )
        .unwrap()
    }

    /// `u_t = −u·u_x + 0.1 u_xx`
    pub fn burgers() -> Self {
        Self::new(
            "burgers",
            vec![
                FeatureTerm::from_pairs(&[(0, 1), (1, 1)]).unwrap(),
                FeatureTerm::from_pairs(&[(2, 1)]).unwrap(),
            ],
            Some(vec![-1.0, 0.1]),
        )
        .unwrap()
    }

    /// `u_t = −6u·u_x − u_xxx`
    pub fn kdv() -> Self {
        Self::new(
            "kdv",
            vec![
                FeatureTerm::from_pairs(&[(0, 1), (1, 1)]).unwrap(),
                FeatureTerm::from_pairs(&[(3, 1)]).unwrap(),
            ],
            Some(vec![-6.0, -1.0]),
        )
        .unwrap()
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "allen-cahn" | "ac" => Ok(Self::allen_cahn()),
            "burgers" => Ok(Self::burgers()),
            "kdv" => Ok(Self::kdv()),
            other => Err(Error::arg(format!(
                "unknown pde '{other}', presets are: {}",
                Self::PRESETS.join(", ")
            ))),
        }
    }

    /// Reads a JSON spec: `{"name": .., "terms": [[{"order":0,"power":1}, ..], ..], "true_p": [..]}`.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: Self = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn terms(&self) -> &[FeatureTerm] {
        &self.terms
    }

    pub fn true_p(&self) -> Option<&[f64]> {
        self.true_p.as_deref()
    }

    pub fn max_x_order(&self) -> u8 {
        self.terms.iter().map(|t| t.max_order()).max().unwrap_or(0)
    }

    pub fn term_names(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.to_string()).collect()
    }
}

/// Normalization factors: `t' = (t − t_min)/s_t`, `x' = (x − x_mid)/s_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainScales {
    pub s_t: f64,
    pub s_x: f64,
}

impl DomainScales {
    pub const UNIT: DomainScales = DomainScales { s_t: 1.0, s_x: 1.0 };

    pub fn new(s_t: f64, s_x: f64) -> Result<Self> {
        if !(s_t > 0.0 && s_x > 0.0 && s_t.is_finite() && s_x.is_finite()) {
            return Err(Error::arg(format!(
                "domain scales must be positive, got s_t={s_t}, s_x={s_x}"
            )));
        }
        Ok(Self { s_t, s_x })
    }

    /// Physical spatial derivatives `[u, u_x, u_xx, u_xxx]` of a jet.
    pub fn physical_derivs(&self, jet: &Jet) -> [f64; 4] {
        let inv = 1.0 / self.s_x;
        [
            jet.u,
            jet.du_dx * inv,
            jet.d2u_dx2 * inv * inv,
            jet.d3u_dx3 * inv * inv * inv,
        ]
    }
}

/// Feature library: one row per jet, one column per term, in physical units.
pub fn build_theta(jets: &[Jet], spec: &PdeSpec, scales: DomainScales) -> Result<Matrix> {
    if jets.is_empty() {
        return Err(Error::arg("no jets to build a feature library from"));
    }
    let need = spec.max_x_order();
    if let Some(j) = jets.iter().find(|j| j.x_order < need) {
        return Err(Error::arg(format!(
            "spec '{}' needs x-derivatives up to order {need}, jets carry order {}",
            spec.name, j.x_order
        )));
    }
    let k = spec.terms.len();
    let mut theta = Matrix::zeros(jets.len(), k);
    for (i, jet) in jets.iter().enumerate() {
        let d = scales.physical_derivs(jet);
        for (c, term) in spec.terms.iter().enumerate() {
            theta[(i, c)] = term.value(&d);
        }
    }
    Ok(theta)
}

/// Physical `∂u/∂t` for every jet.
pub fn time_derivatives(jets: &[Jet], scales: DomainScales) -> Vec<f64> {
    jets.iter().map(|j| j.du_dt / scales.s_t).collect()
}

/// `p̂ = R⁻¹ Qᵀ u_t`.
pub fn solve_parameters(theta: &Matrix, u_t: &[f64]) -> Result<Vec<f64>> {
    qr_least_squares(theta, u_t)
}

/// `(1/N) Σ (u − û)²`.
pub fn mse_loss(samples: &[f64], predictions: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::arg("empty batch"));
    }
    if samples.len() != predictions.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples vs {} predictions",
            samples.len(),
            predictions.len()
        )));
    }
    let s: f64 = samples
        .iter()
        .zip(predictions)
        .map(|(u, p)| (u - p) * (u - p))
        .sum();
    Ok(s / samples.len() as f64)
}

/// Residuals `u_t − Θ p`.
pub fn residuals(u_t: &[f64], theta: &Matrix, p: &[f64]) -> Result<Vec<f64>> {
    if u_t.len() != theta.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} time derivatives vs {} library rows",
            u_t.len(),
            theta.rows()
        )));
    }
    let pred = theta.matvec(p)?;
    Ok(u_t.iter().zip(pred).map(|(a, b)| a - b).collect())
}

/// `(1/N) Σ (u_t − Θ_i p)²`.
pub fn derivative_loss(u_t: &[f64], theta: &Matrix, p: &[f64]) -> Result<f64> {
    if u_t.is_empty() {
        return Err(Error::arg("empty batch"));
    }
    let r = residuals(u_t, theta, p)?;
    Ok(r.iter().map(|v| v * v).sum::<f64>() / u_t.len() as f64)
}

/// Loss weights `mu1·mse + mu2·deri`, both restricted to (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub mu1: f64,
    pub mu2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { mu1: 1.0, mu2: 1.0 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::arg(format!("{name} = {v} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

pub fn total_loss(mse: f64, deri: f64, mu1: f64, mu2: f64) -> Result<f64> {
    LossWeights { mu1, mu2 }.validate()?;
    Ok(mu1 * mse + mu2 * deri)
}

/// `|truth − est| / |truth|` per coefficient; `None` where the truth is zero.
pub fn relative_error(truth: &[f64], est: &[f64]) -> Result<Vec<Option<f64>>> {
    if truth.len() != est.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} true vs {} estimated coefficients",
            truth.len(),
            est.len()
        )));
    }
    Ok(truth
        .iter()
        .zip(est)
        .map(|(&t, &e)| (t != 0.0).then(|| (t - e).abs() / t.abs()))
        .collect())
}
