use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::grad::{accumulate, finish_mean, Gradients};
use super::model::MlpModel;
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.005,
            batch_size: 32,
            epochs: 200,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1)")));
            }
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::Config("adam_eps must be positive".into()));
        }
        Ok(())
    }
}

/// Adam first/second moments, shaped like the model's parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Gradients,
    v: Gradients,
    step: u64,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        AdamState {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, model: &mut MlpModel, grad: &Gradients, cfg: &TrainConfig) {
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (li, layer) in model.layers_mut().iter_mut().enumerate() {
            let (gw, gb) = &grad.layers[li];
            let (mw, mb) = &mut self.m.layers[li];
            let (vw, vb) = &mut self.v.layers[li];
            let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
            let grads = gw.iter().chain(gb.iter());
            let ms = mw.iter_mut().chain(mb.iter_mut());
            let vs = vw.iter_mut().chain(vb.iter_mut());
            for (((p, &g), m), v) in params.zip(grads).zip(ms).zip(vs) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
            }
        }
    }
}

/// Produces the visiting order of training instances for one epoch.
pub trait EpochOrder {
    fn order(&self, n: usize, rng: &mut Rng) -> Vec<usize>;

    /// Checked once before training begins.
    fn validate(&self, _cfg: &TrainConfig) -> Result<()> {
        Ok(())
    }
}

/// Plain instance-level shuffle.
#[derive(Debug, Clone, Copy, Default)]
pub struct Shuffled;

impl EpochOrder for Shuffled {
    fn order(&self, n: usize, rng: &mut Rng) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        idx
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: MlpModel,
    /// Mean per-sample loss of each epoch, measured before that sample's update.
    pub epoch_losses: Vec<f64>,
}

pub fn train(model: &MlpModel, inputs: &[Vec<f64>], labels: &[u8], cfg: &TrainConfig) -> Result<MlpModel> {
    train_with(model, inputs, labels, cfg, &Shuffled, |_, _| {}).map(|r| r.model)
}

/// Mini-batch Adam for `cfg.epochs` full passes. The last partial batch is kept.
///
/// `on_epoch(epoch, model)` runs after every epoch with the 1-based epoch index.
/// Within a batch, gradients are summed in ascending instance order, so the
/// update depends only on batch membership.
pub fn train_with(
    model: &MlpModel,
    inputs: &[Vec<f64>],
    labels: &[u8],
    cfg: &TrainConfig,
    order: &dyn EpochOrder,
    mut on_epoch: impl FnMut(usize, &MlpModel),
) -> Result<TrainReport> {
    cfg.validate()?;
    order.validate(cfg)?;
    if inputs.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::Input("inputs and labels differ in length".into()));
    }
    if let Some(bad) = inputs.iter().position(|x| x.len() != model.input_dim()) {
        return Err(Error::Input(format!(
            "instance {bad} has {} features, model expects {}",
            inputs[bad].len(),
            model.input_dim()
        )));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::Input("labels must be 0 or 1".into()));
    }

    let mut model = model.clone();
    let mut adam = AdamState::new(&model);
    let mut rng = rng::seeded(cfg.seed);
    let mut grad = Gradients::zeros_like(&model);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let perm = order.order(inputs.len(), &mut rng);
        debug_assert_eq!(perm.len(), inputs.len());
        let mut epoch_loss = 0.0;
        for (batch_no, chunk) in perm.chunks(cfg.batch_size).enumerate() {
            let mut batch = chunk.to_vec();
            batch.sort_unstable();
            grad.layers.iter_mut().for_each(|(w, b)| {
                w.fill(0.0);
                b.fill(0.0);
            });
            let mut batch_loss = 0.0;
            for &i in &batch {
                let p = accumulate(&model, &inputs[i], labels[i], &mut grad);
                let p = p.clamp(1e-12, 1.0 - 1e-12);
                batch_loss -= if labels[i] == 1 { p.ln() } else { (1.0 - p).ln() };
            }
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, batch: batch_no });
            }
            finish_mean(&mut grad, batch.len());
            adam.update(&mut model, &grad, cfg);
            epoch_loss += batch_loss;
        }
        epoch_losses.push(epoch_loss / inputs.len() as f64);
        on_epoch(epoch, &model);
    }
    Ok(TrainReport { model, epoch_losses })
}
