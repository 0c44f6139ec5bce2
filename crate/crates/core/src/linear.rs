//! Closed-form extraction of a linear classifier from one CF/CCF pair.
//!
//! For a linear cloud model the explanation `c` and its counterfactual `c′`
//! sit symmetrically on either side of the boundary along the normal
//! direction, so their midpoint lies on the boundary and their difference
//! is parallel to the normal. No training is needed.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::data::Normalizer;
use crate::nn::{Activation, Layer, MlpModel};
use crate::oracle::{CfConfig, CfOracle};
use crate::rng;
use crate::{Error, Result};

/// Decision rule: class 1 iff `θ·x + b ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl LinearModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(t, v)| t * v).sum::<f64>() + self.offset
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.score(x) >= 0.0)
    }
}

/// Recovers the boundary from a CF and the CF of that CF, oriented by `ccf_label`.
///
/// The pair must lie in the space where the cloud model is linear (its
/// normalized input space when a normalizer is in front of it; an affine
/// normalizer keeps linear boundaries linear, so raw space works too).
pub fn extract_linear(cf: &[f64], ccf: &[f64], ccf_label: u8) -> Result<LinearModel> {
    if cf.len() != ccf.len() || cf.is_empty() {
        return Err(Error::Input("cf and ccf must have the same positive dimension".into()));
    }
    if ccf_label > 1 {
        return Err(Error::Input("ccf_label must be 0 or 1".into()));
    }
    let mut v: Vec<f64> = cf.iter().zip(ccf).map(|(a, b)| a - b).collect();
    let norm = v.iter().map(|d| d * d).sum::<f64>().sqrt();
    if !(norm > 1e-9) {
        return Err(Error::DegeneratePair);
    }
    // cf − ccf points from the ccf's class toward the cf's class
    let sign = if ccf_label == 1 { -1.0 } else { 1.0 };
    v.iter_mut().for_each(|d| *d *= sign / norm);
    let mid: Vec<f64> = cf.iter().zip(ccf).map(|(a, b)| 0.5 * (a + b)).collect();
    let offset = -v.iter().zip(&mid).map(|(t, m)| t * m).sum::<f64>();
    Ok(LinearModel { normal: v, offset })
}

/// Outcome of one random trial of [`lemma_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaTrial {
    pub dim: usize,
    /// Agreement with the cloud on uniform points of `[-1, 1]^dim`; `None`
    /// when either explanation failed to converge.
    pub agreement: Option<f64>,
    pub api_calls: u64,
}

/// Draws `models` random single-layer clouds (dimensions cycling through
/// `dims`, boundary crossing the box), recovers each from one
/// explain-of-explain pair and scores the recovery on `points` uniform samples.
pub fn lemma_check(models: usize, dims: &[usize], points: usize, seed: u64) -> Result<Vec<LemmaTrial>> {
    if dims.is_empty() || dims.contains(&0) || points == 0 {
        return Err(Error::Config("lemma check needs positive dimensions and points".into()));
    }
    let mut r = rng::seeded(seed);
    let mut out = Vec::with_capacity(models);
    for i in 0..models {
        let d = dims[i % dims.len()];
        let weights: Vec<f64> = (0..d).map(|_| r.gen_range(-2.0..2.0)).collect();
        let anchor: Vec<f64> = (0..d).map(|_| r.gen_range(-0.5..0.5)).collect();
        let bias = -weights.iter().zip(&anchor).map(|(w, a)| w * a).sum::<f64>();
        let model = MlpModel::from_layers(vec![Layer {
            inputs: d,
            outputs: 1,
            activation: Activation::Sigmoid,
            weights,
            bias: vec![bias],
        }])?;
        let cloud = Classifier::new(model, Normalizer::identity(d))?;
        let oracle = CfOracle::new(cloud.clone(), CfConfig::default())?;
        let x: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let (cf, ccf) = oracle.explain_of_explain(&x)?;
        let agreement = if cf.converged && ccf.converged {
            let lin = extract_linear(&cf.explanation, &ccf.explanation, ccf.cf_label)?;
            let mut same = 0usize;
            for _ in 0..points {
                let p: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
                same += usize::from(cloud.predict(&p)? == lin.predict(&p));
            }
            Some(same as f64 / points as f64)
        } else {
            None
        };
        out.push(LemmaTrial {
            dim: d,
            agreement,
            api_calls: oracle.meter().total(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn recovers_axis_aligned_boundary() {
        let m = extract_linear(&[3.405, 0.0], &[2.595, 0.0], 0).unwrap();
        assert!((m.normal[0] - 1.0).abs() < 1e-12);
        assert!(m.normal[1].abs() < 1e-12);
        assert!((m.offset + 3.0).abs() < 1e-12);
    }

    #[test]
    fn argument_order_does_not_matter() {
        let a = extract_linear(&[3.405, 0.0], &[2.595, 0.0], 0).unwrap();
        let b = extract_linear(&[2.595, 0.0], &[3.405, 0.0], 1).unwrap();
        for x in [[0.0, 0.0], [3.1, 9.0], [2.9, -4.0], [100.0, 1.0]] {
            assert_eq!(a.predict(&x), b.predict(&x));
        }
    }

    #[test]
    fn midpoint_is_on_boundary() {
        let cf = [1.0, 2.0, -0.5];
        let ccf = [0.2, 1.1, 0.3];
        let m = extract_linear(&cf, &ccf, 1).unwrap();
        let mid: Vec<f64> = cf.iter().zip(&ccf).map(|(a, b)| 0.5 * (a + b)).collect();
        assert!(m.score(&mid).abs() < 1e-12);
        assert_eq!(m.predict(&ccf), 1);
        assert_eq!(m.predict(&cf), 0);
    }

    #[test]
    fn coincident_pair_is_degenerate() {
        assert!(matches!(
            extract_linear(&[1.0, 1.0], &[1.0, 1.0], 0),
            Err(Error::DegeneratePair)
        ));
    }

    proptest! {
        #[test]
        fn rescaling_the_pair_preserves_the_rule(
            mid in prop::collection::vec(-5.0f64..5.0, 3),
            dir in prop::collection::vec(-1.0f64..1.0, 3),
            scale in 0.01f64..100.0,
            probe in prop::collection::vec(-10.0f64..10.0, 3),
        ) {
            prop_assume!(dir.iter().map(|d| d * d).sum::<f64>() > 1e-3);
            let pair = |s: f64| {
                let cf: Vec<f64> = mid.iter().zip(&dir).map(|(m, d)| m + s * d).collect();
                let ccf: Vec<f64> = mid.iter().zip(&dir).map(|(m, d)| m - s * d).collect();
                extract_linear(&cf, &ccf, 0).unwrap()
            };
            let a = pair(1.0);
            let b = pair(scale);
            prop_assume!(a.score(&probe).abs() > 1e-9);
            prop_assert_eq!(a.predict(&probe), b.predict(&probe));
        }
    }

    #[test]
    fn lemma_check_recovers_random_clouds() {
        let trials = lemma_check(6, &[2, 5, 10], 2000, 3).unwrap();
        assert_eq!(trials.iter().map(|t| t.dim).collect::<Vec<_>>(), [2, 5, 10, 2, 5, 10]);
        for t in &trials {
            assert!(t.agreement.unwrap() >= 0.999, "{t:?}");
            assert_eq!(t.api_calls, 2);
        }
        assert_eq!(trials, lemma_check(6, &[2, 5, 10], 2000, 3).unwrap());
        assert!(lemma_check(1, &[], 10, 0).is_err());
    }
}
