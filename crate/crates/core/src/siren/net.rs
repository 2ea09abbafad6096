use std::ops::Range;

use ndarray::{ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_OMEGA0: f64 = 30.0;
pub const DEFAULT_WIDTHS: [usize; 5] = [2, 128, 128, 128, 1];

/// Fully connected network `(t, x) ↦ û` with `sin(ω₀·(W h + b))` on every
/// hidden layer and a linear output layer.
///
/// Parameters live in one flat vector, layer by layer, each layer stored as
/// its row-major `out × in` weight matrix followed by its `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct SirenNet {
    widths: Vec<usize>,
    omega0: f64,
    params: Vec<f64>,
}

impl SirenNet {
    /// Wraps an existing parameter vector.
    pub fn from_params(widths: Vec<usize>, omega0: f64, params: Vec<f64>) -> Result<Self> {
        validate_widths(&widths)?;
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::arg(format!("omega0 must be positive, got {omega0}")));
        }
        let expected = param_count(&widths);
        if params.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for widths {widths:?}, expected {expected}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::arg("non-finite network parameter"));
        }
        Ok(Self {
            widths,
            omega0,
            params,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// Flat ranges of layer `l`'s weights and biases.
    pub fn layer_ranges(&self, l: usize) -> (Range<usize>, Range<usize>) {
        layer_ranges(&self.widths, l)
    }

    pub fn weights(&self, l: usize) -> ArrayView2<'_, f64> {
        let (w, _) = self.layer_ranges(l);
        ArrayView2::from_shape((self.widths[l + 1], self.widths[l]), &self.params[w])
            .expect("layer shape")
    }

    pub fn biases(&self, l: usize) -> ArrayView1<'_, f64> {
        let (_, b) = self.layer_ranges(l);
        ArrayView1::from(&self.params[b])
    }

    /// Plain evaluation of `û(t, x)`.
    pub fn forward(&self, t: f64, x: f64) -> f64 {
        let mut h = vec![t, x];
        let last = self.num_layers() - 1;
        for l in 0..=last {
            let w = self.weights(l);
            let b = self.biases(l);
            let mut next: Vec<f64> = (0..w.nrows())
                .map(|i| w.row(i).iter().zip(&h).map(|(a, v)| a * v).sum::<f64>() + b[i])
                .collect();
            if l < last {
                next.iter_mut().for_each(|a| *a = (self.omega0 * *a).sin());
            }
            h = next;
        }
        h[0]
    }
}

/// SIREN initialization: first-layer weights uniform on ±1/fan_in, deeper
/// layers on ±sqrt(6/fan_in)/ω₀, zero biases. ChaCha8 seeded, so identical
/// seeds give bit-identical networks.
pub fn init_siren(widths: &[usize], omega0: f64, seed: u64) -> Result<SirenNet> {
    validate_widths(widths)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(param_count(widths));
    for l in 0..widths.len() - 1 {
        let fan_in = widths[l] as f64;
        let limit = if l == 0 {
            1.0 / fan_in
        } else {
            (6.0 / fan_in).sqrt() / omega0
        };
        for _ in 0..widths[l] * widths[l + 1] {
            params.push(rng.gen_range(-limit..=limit));
        }
        params.extend(std::iter::repeat(0.0).take(widths[l + 1]));
    }
    SirenNet::from_params(widths.to_vec(), omega0, params)
}

pub fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn layer_ranges(widths: &[usize], l: usize) -> (Range<usize>, Range<usize>) {
    let start: usize = widths[..=l].windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let nw = widths[l] * widths[l + 1];
    (start..start + nw, start + nw..start + nw + widths[l + 1])
}

fn validate_widths(widths: &[usize]) -> Result<()> {
    if widths.len() < 3 {
        return Err(Error::arg(format!(
            "need input, at least one hidden and an output layer: {widths:?}"
        )));
    }
    if widths[0] != 2 || *widths.last().unwrap() != 1 {
        return Err(Error::arg(format!(
            "network maps (t, x) to u: widths must start with 2 and end with 1, got {widths:?}"
        )));
    }
    if widths.contains(&0) {
        return Err(Error::arg("zero-width layer"));
    }
    Ok(())
}
