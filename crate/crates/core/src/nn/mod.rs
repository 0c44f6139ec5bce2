//! Minimal deterministic neural-network engine.
//!
//! Dense binary classifiers only: every model ends in a single sigmoid unit,
//! and class 1 is predicted iff the output probability is at least 0.5.

mod grad;
mod io;
mod model;
mod train;

pub(crate) use grad::grad_target_logit_unchecked;
pub use grad::{bce_loss, grad_input, grad_logit_input, grad_params, Gradients};
pub use io::{load_model, read_model, save_model, write_model, FORMAT_NAME, FORMAT_VERSION};
pub use model::{mlp_init, Activation, Architecture, Layer, LayerSpec, MlpModel};
pub use train::{train, train_with, AdamState, EpochOrder, Shuffled, TrainConfig, TrainReport};

/// Logistic function, split by sign so that large |z| never overflows.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`sigmoid`] on (0, 1).
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
