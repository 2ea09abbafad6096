//! Sine-activated networks with exact input derivatives.

mod checkpoint;
mod jet;
mod net;

pub use checkpoint::{load_checkpoint, parse_checkpoint, save_checkpoint, to_checkpoint_string};
pub use jet::{
    backward_batch, forward_batch, forward_jet, loss_gradients, Jet, JetAdjoint, JetLoss, JetTape,
    LossEvaluation, ParamGrad,
};
pub use net::{init_siren, param_count, SirenNet, DEFAULT_OMEGA0, DEFAULT_WIDTHS};
