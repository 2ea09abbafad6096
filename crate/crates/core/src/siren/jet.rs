//! Exact input derivatives of a [`SirenNet`] and reverse accumulation of
//! parameter gradients through them.
//!
//! Each point carries a truncated Taylor bundle through the network: the value,
//! the first t-derivative and up to three x-derivatives. A linear layer maps
//! every component by the same weight matrix (biases only touch the value);
//! a sine layer combines them with the closed-form derivatives of `sin`:
//!
//! ```text
//! h     = sin(ωa)
//! h_t   = ω cos(ωa) a_t
//! h_x   = ω cos(ωa) a_x
//! h_xx  = ω cos(ωa) a_xx − ω² sin(ωa) a_x²
//! h_xxx = ω cos(ωa) a_xxx − 3ω² sin(ωa) a_x a_xx − ω³ cos(ωa) a_x³
//! ```
//!
//! The batch is stacked component-major, `(C·B) × width`, so each layer is a
//! single matrix product. The backward pass inverts those formulas, which
//! yields derivatives-of-derivatives with respect to the weights.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayViewMut1, ArrayViewMut2, Axis};
use serde::{Deserialize, Serialize};

use super::net::SirenNet;
use crate::error::{Error, Result};

/// Value and derivatives of `û` at one point, with respect to the network's
/// (normalized) inputs. Orders above `x_order` are zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub u: f64,
    pub du_dt: f64,
    pub du_dx: f64,
    pub d2u_dx2: f64,
    pub d3u_dx3: f64,
    /// Highest x-derivative order that was propagated.
    pub x_order: u8,
}

impl Jet {
    pub fn x_derivative(&self, k: u8) -> f64 {
        match k {
            0 => self.u,
            1 => self.du_dx,
            2 => self.d2u_dx2,
            3 => self.d3u_dx3,
            _ => 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.u, self.du_dt, self.du_dx, self.d2u_dx2, self.d3u_dx3]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Sensitivity of a scalar loss to each jet component.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct JetAdjoint {
    pub u: f64,
    pub du_dt: f64,
    pub du_dx: f64,
    pub d2u_dx2: f64,
    pub d3u_dx3: f64,
}

/// Gradient of a scalar loss with respect to every network parameter, laid
/// out like [`SirenNet::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad(pub Vec<f64>);

impl ParamGrad {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|g| g.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// A scalar function of a batch of jets that can report its partials.
pub trait JetLoss {
    fn value_and_adjoints(&self, jets: &[Jet]) -> (f64, Vec<JetAdjoint>);
}

impl<F> JetLoss for F
where
    F: Fn(&[Jet]) -> (f64, Vec<JetAdjoint>),
{
    fn value_and_adjoints(&self, jets: &[Jet]) -> (f64, Vec<JetAdjoint>) {
        self(jets)
    }
}

/// Intermediate values of a batched jet pass, kept for the backward sweep.
#[derive(Debug, Clone)]
pub struct JetTape {
    batch: usize,
    comps: usize,
    /// Stacked input of every layer.
    inputs: Vec<Array2<f64>>,
    /// Stacked pre-activations of every hidden layer.
    pre: Vec<Array2<f64>>,
    sin: Vec<Array2<f64>>,
    cos: Vec<Array2<f64>>,
}

impl JetTape {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

fn check_order(max_x_order: u8) -> Result<usize> {
    if !(1..=3).contains(&max_x_order) {
        return Err(Error::arg(format!(
            "x-derivative order must be 1, 2 or 3, got {max_x_order}"
        )));
    }
    Ok(2 + max_x_order as usize)
}

/// Jets at a single point.
pub fn forward_jet(net: &SirenNet, t: f64, x: f64, max_x_order: u8) -> Result<Jet> {
    let (jets, _) = forward_batch(net, &[(t, x)], max_x_order)?;
    Ok(jets[0])
}

/// Jets for a batch of `(t, x)` points plus the tape for [`backward_batch`].
pub fn forward_batch(
    net: &SirenNet,
    points: &[(f64, f64)],
    max_x_order: u8,
) -> Result<(Vec<Jet>, JetTape)> {
    let comps = check_order(max_x_order)?;
    let batch = points.len();
    if batch == 0 {
        return Err(Error::arg("empty batch"));
    }
    let omega = net.omega0();
    let layers = net.num_layers();

    // component rows: value, ∂t, ∂x, ∂xx, ∂xxx
    let mut h = Array2::<f64>::zeros((comps * batch, 2));
    for (b, &(t, x)) in points.iter().enumerate() {
        h[[b, 0]] = t;
        h[[b, 1]] = x;
        h[[batch + b, 0]] = 1.0;
        h[[2 * batch + b, 1]] = 1.0;
    }

    let mut tape = JetTape {
        batch,
        comps,
        inputs: Vec::with_capacity(layers),
        pre: Vec::with_capacity(layers - 1),
        sin: Vec::with_capacity(layers - 1),
        cos: Vec::with_capacity(layers - 1),
    };

    for l in 0..layers {
        let w = net.weights(l);
        let b = net.biases(l);
        let mut a = h.dot(&w.t());
        a.slice_mut(s![..batch, ..])
            .axis_iter_mut(Axis(0))
            .for_each(|mut row| row += &b);
        tape.inputs.push(h);
        if l + 1 == layers {
            h = a;
            break;
        }
        let (next, sn, cs) = activate(&a, batch, comps, omega);
        tape.pre.push(a);
        tape.sin.push(sn);
        tape.cos.push(cs);
        h = next;
    }

    let out = h.as_slice().expect("standard layout");
    let jets = (0..batch)
        .map(|b| Jet {
            u: out[b],
            du_dt: out[batch + b],
            du_dx: out[2 * batch + b],
            d2u_dx2: if comps > 3 { out[3 * batch + b] } else { 0.0 },
            d3u_dx3: if comps > 4 { out[4 * batch + b] } else { 0.0 },
            x_order: max_x_order,
        })
        .collect();
    Ok((jets, tape))
}

fn activate(pre: &Array2<f64>, batch: usize, comps: usize, omega: f64) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let width = pre.ncols();
    let blk = batch * width;
    let a = pre.as_slice().expect("standard layout");
    let mut h = Array2::<f64>::zeros(pre.raw_dim());
    let mut sn = Array2::<f64>::zeros((batch, width));
    let mut cs = Array2::<f64>::zeros((batch, width));
    {
        let hs = h.as_slice_mut().unwrap();
        let ss = sn.as_slice_mut().unwrap();
        let cc = cs.as_slice_mut().unwrap();
        let w2 = omega * omega;
        let w3 = w2 * omega;
        for i in 0..blk {
            let (s, c) = (omega * a[i]).sin_cos();
            ss[i] = s;
            cc[i] = c;
            hs[i] = s;
            let wc = omega * c;
            hs[blk + i] = wc * a[blk + i];
            if comps > 2 {
                let a1 = a[2 * blk + i];
                hs[2 * blk + i] = wc * a1;
                if comps > 3 {
                    let a2 = a[3 * blk + i];
                    hs[3 * blk + i] = wc * a2 - w2 * s * a1 * a1;
                    if comps > 4 {
                        let a3 = a[4 * blk + i];
                        hs[4 * blk + i] =
                            wc * a3 - 3.0 * w2 * s * a1 * a2 - w3 * c * a1 * a1 * a1;
                    }
                }
            }
        }
    }
    (h, sn, cs)
}

/// Adjoint of [`activate`]: turns sensitivities of the layer output into
/// sensitivities of its pre-activation components, in place.
fn activate_backward(g: &mut Array2<f64>, pre: &Array2<f64>, sn: &Array2<f64>, cs: &Array2<f64>, comps: usize, omega: f64) {
    let blk = sn.len();
    let a = pre.as_slice().unwrap();
    let ss = sn.as_slice().unwrap();
    let cc = cs.as_slice().unwrap();
    let gs = g.as_slice_mut().unwrap();
    let w2 = omega * omega;
    let w3 = w2 * omega;
    let w4 = w3 * omega;
    for i in 0..blk {
        let s = ss[i];
        let c = cc[i];
        let wc = omega * c;
        let (g0, gt) = (gs[i], gs[blk + i]);
        let at = a[blk + i];
        let mut ga0 = g0 * wc - gt * w2 * s * at;
        gs[blk + i] = gt * wc;
        if comps > 2 {
            let g1 = gs[2 * blk + i];
            let a1 = a[2 * blk + i];
            ga0 -= g1 * w2 * s * a1;
            let mut ga1 = g1 * wc;
            if comps > 3 {
                let g2 = gs[3 * blk + i];
                let a2 = a[3 * blk + i];
                ga0 += g2 * (-w2 * s * a2 - w3 * c * a1 * a1);
                ga1 -= g2 * 2.0 * w2 * s * a1;
                let mut ga2 = g2 * wc;
                if comps > 4 {
                    let g3 = gs[4 * blk + i];
                    let a3 = a[4 * blk + i];
                    ga0 += g3 * (-w2 * s * a3 - 3.0 * w3 * c * a1 * a2 + w4 * s * a1 * a1 * a1);
                    ga1 += g3 * (-3.0 * w2 * s * a2 - 3.0 * w3 * c * a1 * a1);
                    ga2 -= g3 * 3.0 * w2 * s * a1;
                    gs[4 * blk + i] = g3 * wc;
                }
                gs[3 * blk + i] = ga2;
            }
            gs[2 * blk + i] = ga1;
        }
        gs[i] = ga0;
    }
}

/// Parameter gradient of `Σ_b ⟨adjoints[b], jets[b]⟩` through a recorded pass.
pub fn backward_batch(net: &SirenNet, tape: &JetTape, adjoints: &[JetAdjoint]) -> Result<ParamGrad> {
    let batch = tape.batch;
    let comps = tape.comps;
    if adjoints.len() != batch {
        return Err(Error::DimensionMismatch(format!(
            "{} adjoints for a batch of {batch}",
            adjoints.len()
        )));
    }
    let omega = net.omega0();
    let layers = net.num_layers();
    let mut grad = vec![0.0; net.num_params()];

    let mut g = Array2::<f64>::zeros((comps * batch, 1));
    for (b, adj) in adjoints.iter().enumerate() {
        g[[b, 0]] = adj.u;
        g[[batch + b, 0]] = adj.du_dt;
        g[[2 * batch + b, 0]] = adj.du_dx;
        if comps > 3 {
            g[[3 * batch + b, 0]] = adj.d2u_dx2;
        }
        if comps > 4 {
            g[[4 * batch + b, 0]] = adj.d3u_dx3;
        }
    }

    for l in (0..layers).rev() {
        if l + 1 < layers {
            activate_backward(&mut g, &tape.pre[l], &tape.sin[l], &tape.cos[l], comps, omega);
        }
        let (wr, br) = net.layer_ranges(l);
        let (n_out, n_in) = (net.widths()[l + 1], net.widths()[l]);
        {
            let mut gw = ArrayViewMut2::from_shape((n_out, n_in), &mut grad[wr]).unwrap();
            general_mat_mul(1.0, &g.t(), &tape.inputs[l], 0.0, &mut gw);
        }
        {
            let mut gb = ArrayViewMut1::from(&mut grad[br]);
            gb.assign(&g.slice(s![..batch, ..]).sum_axis(Axis(0)));
        }
        if l > 0 {
            g = g.dot(&net.weights(l));
        }
    }
    Ok(ParamGrad(grad))
}

/// Result of one loss evaluation with gradients.
#[derive(Debug, Clone)]
pub struct LossEvaluation {
    pub loss: f64,
    pub jets: Vec<Jet>,
    pub grad: ParamGrad,
}

/// Runs the jet pass, evaluates `loss` and back-propagates its partials to
/// every parameter.
pub fn loss_gradients(
    net: &SirenNet,
    points: &[(f64, f64)],
    max_x_order: u8,
    loss: &impl JetLoss,
) -> Result<LossEvaluation> {
    let (jets, tape) = forward_batch(net, points, max_x_order)?;
    let (value, adjoints) = loss.value_and_adjoints(&jets);
    let grad = backward_batch(net, &tape, &adjoints)?;
    Ok(LossEvaluation {
        loss: value,
        jets,
        grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::siren::init_siren;

    #[test]
    fn single_neuron_jet_closed_form() {
        let (wx, omega) = (0.05, 30.0);
        let net = SirenNet::from_params(vec![2, 1, 1], omega, vec![0.0, wx, 0.0, 1.0, 0.0]).unwrap();
        let x = 0.37;
        let j = forward_jet(&net, 0.2, x, 3).unwrap();
        let k = omega * wx;
        let arg = k * x;
        assert!((j.u - arg.sin()).abs() < 1e-15);
        assert!((j.du_dx - k * arg.cos()).abs() < 1e-13);
        assert!((j.d2u_dx2 + k * k * arg.sin()).abs() < 1e-12);
        assert!((j.d3u_dx3 + k * k * k * arg.cos()).abs() < 1e-11);
        assert_eq!(j.du_dt, 0.0);
    }

    #[test]
    fn unrequested_orders_are_zero() {
        let net = init_siren(&[2, 16, 16, 1], 30.0, 3).unwrap();
        let j = forward_jet(&net, 0.4, -0.2, 1).unwrap();
        assert_eq!((j.d2u_dx2, j.d3u_dx3), (0.0, 0.0));
        let j2 = forward_jet(&net, 0.4, -0.2, 2).unwrap();
        assert_eq!(j2.d3u_dx3, 0.0);
        assert_eq!(j.u, j2.u);
        assert!(forward_jet(&net, 0.0, 0.0, 0).is_err());
        assert!(forward_jet(&net, 0.0, 0.0, 4).is_err());
    }

    #[test]
    fn batch_value_matches_plain_forward() {
        let net = init_siren(&[2, 32, 32, 1], 30.0, 9).unwrap();
        let pts = [(0.1, 0.2), (0.9, -0.8), (0.5, 0.0)];
        let (jets, _) = forward_batch(&net, &pts, 3).unwrap();
        for (j, &(t, x)) in jets.iter().zip(&pts) {
            assert!((j.u - net.forward(t, x)).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let net = init_siren(&[2, 8, 8, 1], 30.0, 1).unwrap();
        let loss = |jets: &[Jet]| (3.0, vec![JetAdjoint::default(); jets.len()]);
        let ev = loss_gradients(&net, &[(0.1, 0.1), (0.2, 0.3)], 3, &loss).unwrap();
        assert!(ev.grad.0.iter().all(|&g| g == 0.0));
        assert_eq!(ev.loss, 3.0);
    }

    #[test]
    fn single_neuron_value_gradient_by_hand() {
        // û = wo·sin(ω(wt t + wx x + b)) + bo
        let (wt, wx, b, wo, bo, omega) = (0.02, -0.03, 0.01, 1.3, 0.2, 30.0);
        let net = SirenNet::from_params(vec![2, 1, 1], omega, vec![wt, wx, b, wo, bo]).unwrap();
        let (t, x) = (0.6, -0.4);
        let loss = |jets: &[Jet]| {
            (
                jets[0].u,
                vec![JetAdjoint {
                    u: 1.0,
                    ..Default::default()
                }],
            )
        };
        let ev = loss_gradients(&net, &[(t, x)], 1, &loss).unwrap();
        let arg = omega * (wt * t + wx * x + b);
        let dc = wo * omega * arg.cos();
        let expected = [dc * t, dc * x, dc, arg.sin(), 1.0];
        for (g, e) in ev.grad.0.iter().zip(expected) {
            assert!((g - e).abs() < 1e-13, "{g} vs {e}");
        }
    }
}
