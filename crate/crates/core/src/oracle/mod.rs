//! The simulated cloud API.
//!
//! A [`CfOracle`] wraps a frozen cloud [`Classifier`], answers predictions and
//! counterfactual explanations, and bills every call on its [`Meter`].
//!
//! The explanation for `x` is found by gradient descent on
//! `λ·max(0, σ⁻¹(ε) − z_y(c))² + d(x, c)` in the cloud model's normalized
//! feature space, starting at `c = x`, where `y` is the class opposite to
//! `x`'s and `z_y` its logit. The hinge sits on the logit rather than on
//! `p_y` because a trained cloud saturates: far from its boundary `∇p_y` is
//! below any usable `λ`. `z_y ≥ σ⁻¹(ε)` is the same constraint as
//! `p_y ≥ ε`. The search stops at the first iterate with `p_y(c) ≥ ε`, placed
//! on the contour by bisecting the final step. Whenever `max_steps`
//! steps pass without success, `λ` is multiplied by `lambda_growth`, at most
//! `max_escalations` times.

mod distance;
mod result;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use distance::{distance, mad_stats, mad_stats_dataset, Metric};
pub use result::{read_cf_results, write_cf_results, CfResult};

use crate::classifier::Classifier;
use crate::nn;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CfConfig {
    pub threshold: f64,
    pub metric: Metric,
    /// Per-feature MAD in the solver's (normalized) space; required for L1/MAD.
    pub mad: Option<Vec<f64>>,
    pub lr_cf: f64,
    pub max_steps: usize,
    pub lambda_init: f64,
    pub lambda_growth: f64,
    pub max_escalations: usize,
}

impl Default for CfConfig {
    fn default() -> Self {
        CfConfig {
            threshold: 0.6,
            metric: Metric::L2,
            mad: None,
            lr_cf: 0.01,
            max_steps: 1000,
            lambda_init: 0.1,
            lambda_growth: 10.0,
            max_escalations: 5,
        }
    }
}

impl CfConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.threshold > 0.5 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold must lie in (0.5, 1), got {}",
                self.threshold
            )));
        }
        if !(self.lr_cf > 0.0 && self.lr_cf.is_finite()) {
            return Err(Error::Config("lr_cf must be positive".into()));
        }
        if !(self.lambda_init > 0.0) {
            return Err(Error::Config("lambda_init must be positive".into()));
        }
        if !(self.lambda_growth > 1.0) {
            return Err(Error::Config("lambda_growth must exceed 1".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        match (&self.mad, self.metric) {
            (Some(mad), Metric::L1Mad) => {
                if mad.len() != dim || mad.iter().any(|m| !(*m > 0.0)) {
                    return Err(Error::Config(format!("mad must hold {dim} positive entries")));
                }
            }
            (None, Metric::L1Mad) => return Err(Error::Config("metric l1_mad requires mad values".into())),
            (Some(_), _) => return Err(Error::Config("mad is only meaningful with metric l1_mad".into())),
            (None, _) => {}
        }
        Ok(())
    }
}

/// Billing counters. Monotone; updated atomically.
#[derive(Debug, Default)]
pub struct Meter {
    predict_calls: AtomicU64,
    explain_calls: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MeterReading {
    pub predict_calls: u64,
    pub explain_calls: u64,
}

impl MeterReading {
    pub fn total(&self) -> u64 {
        self.predict_calls + self.explain_calls
    }

    pub fn since(&self, earlier: MeterReading) -> MeterReading {
        MeterReading {
            predict_calls: self.predict_calls - earlier.predict_calls,
            explain_calls: self.explain_calls - earlier.explain_calls,
        }
    }
}

impl Meter {
    pub fn read(&self) -> MeterReading {
        MeterReading {
            predict_calls: self.predict_calls.load(Ordering::Relaxed),
            explain_calls: self.explain_calls.load(Ordering::Relaxed),
        }
    }
}

#[derive(Debug)]
pub struct CfOracle {
    cloud: Arc<Classifier>,
    config: CfConfig,
    meter: Meter,
}

impl CfOracle {
    pub fn new(cloud: Classifier, config: CfConfig) -> Result<Self> {
        config.validate(cloud.dim())?;
        Ok(CfOracle {
            cloud: Arc::new(cloud),
            config,
            meter: Meter::default(),
        })
    }

    /// Same cloud model and configuration, fresh meter.
    pub fn fork(&self) -> CfOracle {
        CfOracle {
            cloud: Arc::clone(&self.cloud),
            config: self.config.clone(),
            meter: Meter::default(),
        }
    }

    pub fn cloud(&self) -> &Classifier {
        &self.cloud
    }

    pub fn config(&self) -> &CfConfig {
        &self.config
    }

    pub fn meter(&self) -> MeterReading {
        self.meter.read()
    }

    pub fn dim(&self) -> usize {
        self.cloud.dim()
    }

    /// Label and class-1 probability. Costs one predict call.
    pub fn predict(&self, x: &[f64]) -> Result<(u8, f64)> {
        let (p, _) = self.cloud.forward(x)?;
        self.meter.predict_calls.fetch_add(1, Ordering::Relaxed);
        Ok((u8::from(p >= 0.5), p))
    }

    /// Counterfactual explanation of `x`. Costs one explain call; the result
    /// carries the prediction of `x` as `origin_label`.
    pub fn explain(&self, x: &[f64]) -> Result<CfResult> {
        let xn = self.cloud.normalizer.apply(x)?;
        let model = &*self.cloud.model;
        let (p1, _) = model.forward(&xn)?;
        self.meter.explain_calls.fetch_add(1, Ordering::Relaxed);

        let cfg = &self.config;
        let mad = cfg.mad.as_deref();
        let origin_label = u8::from(p1 >= 0.5);
        let target = 1 - origin_label;
        let mut c = xn.clone();
        let mut next = c.clone();
        let mut dgrad = vec![0.0; c.len()];
        let mut lambda = cfg.lambda_init;
        let mut p_target = if target == 1 { p1 } else { 1.0 - p1 };
        let mut steps = 0usize;
        let mut converged = p_target >= cfg.threshold;
        let target_logit = nn::logit(cfg.threshold);

        'search: for _ in 0..=cfg.max_escalations {
            if converged {
                break;
            }
            for _ in 0..cfg.max_steps {
                let (s, sgrad) = nn::grad_target_logit_unchecked(model, &c, target);
                let gap = (target_logit - s).max(0.0);
                distance::distance_grad(&xn, &c, cfg.metric, mad, &mut dgrad);
                for (((ni, ci), pg), dg) in next.iter_mut().zip(&c).zip(&sgrad).zip(&dgrad) {
                    *ni = ci - cfg.lr_cf * (-2.0 * lambda * gap * pg + dg);
                }
                if !next.iter().all(|v| v.is_finite()) {
                    break 'search;
                }
                steps += 1;
                let (p1, _) = model.forward_unchecked(&next);
                let p_next = if target == 1 { p1 } else { 1.0 - p1 };
                if p_next >= cfg.threshold {
                    p_target = first_crossing(model, target, cfg.threshold, &mut c, &next);
                    converged = true;
                    break 'search;
                }
                std::mem::swap(&mut c, &mut next);
                p_target = p_next;
            }
            lambda *= cfg.lambda_growth;
        }

        let (p1, _) = model.forward_unchecked(&c);
        let cf_label = u8::from(p1 >= 0.5);
        let dist = distance::distance(&xn, &c, cfg.metric, mad)?;
        Ok(CfResult {
            origin: x.to_vec(),
            explanation: self.cloud.normalizer.invert(&c)?,
            origin_label,
            cf_label,
            achieved_prob: p_target,
            distance: dist,
            steps_used: steps,
            converged,
        })
    }

    /// `(cf, ccf)` with `ccf = explain(cf.explanation)`. Costs two explain calls.
    pub fn explain_of_explain(&self, x: &[f64]) -> Result<(CfResult, CfResult)> {
        let cf = self.explain(x)?;
        let ccf = self.explain(&cf.explanation)?;
        Ok((cf, ccf))
    }
}

/// Bisects the last descent step `from → to` for the earliest point whose
/// target probability reaches `threshold`, so that large late steps do not
/// overshoot the contour. Leaves that point in `from` and returns its probability.
fn first_crossing(model: &nn::MlpModel, target: u8, threshold: f64, from: &mut Vec<f64>, to: &[f64]) -> f64 {
    let prob = |t: f64, buf: &mut Vec<f64>| {
        buf.clear();
        buf.extend(from.iter().zip(to).map(|(a, b)| a + t * (b - a)));
        let (p1, _) = model.forward_unchecked(buf);
        if target == 1 {
            p1
        } else {
            1.0 - p1
        }
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut buf = Vec::with_capacity(to.len());
    for _ in 0..CROSSING_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if prob(mid, &mut buf) >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let p = prob(hi, &mut buf);
    std::mem::swap(from, &mut buf);
    p
}

const CROSSING_BISECTIONS: usize = 40;
