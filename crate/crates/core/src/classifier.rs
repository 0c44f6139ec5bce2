use std::sync::Arc;

use crate::data::Normalizer;
use crate::nn::MlpModel;
use crate::{Error, Result};

/// A model together with the normalizer that feeds it raw features.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub model: Arc<MlpModel>,
    pub normalizer: Normalizer,
}

impl Classifier {
    pub fn new(model: MlpModel, normalizer: Normalizer) -> Result<Self> {
        if model.input_dim() != normalizer.dim() {
            return Err(Error::Config(format!(
                "model takes {} features but normalizer has {}",
                model.input_dim(),
                normalizer.dim()
            )));
        }
        Ok(Classifier {
            model: Arc::new(model),
            normalizer,
        })
    }

    pub fn dim(&self) -> usize {
        self.model.input_dim()
    }

    /// `(prob of class 1, logit)` for a raw feature vector.
    pub fn forward(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.model.forward(&self.normalizer.apply(x)?)
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        self.forward(x).map(|(p, _)| u8::from(p >= 0.5))
    }
}
