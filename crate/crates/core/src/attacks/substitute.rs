use rand::seq::SliceRandom;

use super::set::SubstituteTrainingSet;
use crate::classifier::Classifier;
use crate::data::Normalizer;
use crate::nn::{self, Architecture, EpochOrder, Shuffled, TrainConfig};
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Epoch order that keeps each CF/CCF pair inside one mini-batch.
///
/// Pairs and (paired-up) unpaired items are shuffled as two-element units, so
/// with an even batch size no unit straddles a batch boundary. An odd leftover
/// item goes last.
#[derive(Debug, Clone)]
pub struct PairedOrder {
    pairs: Vec<(usize, usize)>,
}

impl PairedOrder {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        PairedOrder { pairs }
    }
}

impl EpochOrder for PairedOrder {
    fn order(&self, n: usize, rng: &mut Rng) -> Vec<usize> {
        let mut in_pair = vec![false; n];
        for &(a, b) in &self.pairs {
            in_pair[a] = true;
            in_pair[b] = true;
        }
        let mut singles: Vec<usize> = (0..n).filter(|&i| !in_pair[i]).collect();
        singles.shuffle(rng);
        let leftover = if singles.len() % 2 == 1 { singles.pop() } else { None };
        let mut units: Vec<[usize; 2]> = self.pairs.iter().map(|&(a, b)| [a, b]).collect();
        units.extend(singles.chunks_exact(2).map(|c| [c[0], c[1]]));
        units.shuffle(rng);
        let mut out: Vec<usize> = units.into_iter().flatten().collect();
        out.extend(leftover);
        out
    }

    fn validate(&self, cfg: &TrainConfig) -> Result<()> {
        if !cfg.batch_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "paired batching needs an even batch_size, got {}",
                cfg.batch_size
            )));
        }
        Ok(())
    }
}

/// Trains a fresh substitute on `set`.
///
/// Inputs are standardized with `normalizer` (fitted by the caller on the full
/// query split). Weights are initialized from a seed derived from `cfg.seed`.
pub fn train_substitute(
    set: &SubstituteTrainingSet,
    hidden: &[usize],
    cfg: &TrainConfig,
    paired_batching: bool,
    normalizer: &Normalizer,
) -> Result<Classifier> {
    if set.is_empty() {
        return Err(Error::Input("substitute training set is empty".into()));
    }
    set.validate()?;
    let arch = Architecture::with_hidden(normalizer.dim(), hidden)?;
    let init = nn::mlp_init(&arch, rng::derive_seed(cfg.seed, &[0x1a17]))?;
    let inputs = set
        .items
        .iter()
        .map(|i| normalizer.apply(&i.features))
        .collect::<Result<Vec<_>>>()?;
    let labels = set.labels();
    let model = if paired_batching && !set.pairing.is_empty() {
        let order = PairedOrder::new(set.pairing.clone());
        nn::train_with(&init, &inputs, &labels, cfg, &order, |_, _| {})?.model
    } else {
        if paired_batching && !cfg.batch_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "paired batching needs an even batch_size, got {}",
                cfg.batch_size
            )));
        }
        nn::train_with(&init, &inputs, &labels, cfg, &Shuffled, |_, _| {})?.model
    };
    Classifier::new(model, normalizer.clone())
}
