//! Fidelity metrics, diagnostics and the multi-run sweep engine.

mod stats;
mod sweep;

use rand::Rng as _;

pub use stats::{mean, paired_one_sided_p, population_std};
pub use sweep::{
    cell_training_set, read_aggregates_csv, read_records_csv, run_cell, run_sweep, write_aggregates_csv,
    write_records_csv, Aggregate, CellOutcome, CloudSetup, Record, ResultTable, SweepConfig,
};

use crate::classifier::Classifier;
use crate::data::Normalizer;
use crate::oracle::CfResult;
use crate::rng;
use crate::{Error, Result};

/// Fraction of `points` on which both classifiers predict the same label.
/// Each classifier applies its own normalizer.
pub fn agreement(a: &Classifier, b: &Classifier, points: &[Vec<f64>]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Input("agreement needs at least one point".into()));
    }
    if a.dim() != b.dim() {
        return Err(Error::Input(format!(
            "models take {} and {} features",
            a.dim(),
            b.dim()
        )));
    }
    let mut same = 0usize;
    for x in points {
        if a.predict(x)? == b.predict(x)? {
            same += 1;
        }
    }
    Ok(same as f64 / points.len() as f64)
}

/// Disagreement on probe points, `1 − agreement`; a proxy for how far the
/// substitute's boundary sits from the cloud's.
pub fn boundary_shift(cloud: &Classifier, substitute: &Classifier, probes: &[Vec<f64>]) -> Result<f64> {
    Ok(1.0 - agreement(cloud, substitute, probes)?)
}

/// Axis-aligned domain box.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn of(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Input("empty domain".into()))?;
        let mut lower = first.clone();
        let mut upper = first.clone();
        for r in rows {
            for (j, v) in r.iter().enumerate() {
                lower[j] = lower[j].min(*v);
                upper[j] = upper[j].max(*v);
            }
        }
        Ok(Domain { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

/// Default probe set: a 200×200 grid for 2-D domains, otherwise 10 000
/// uniform samples drawn with `seed`.
pub fn probe_points(domain: &Domain, seed: u64) -> Vec<Vec<f64>> {
    if domain.dim() == 2 {
        grid_2d(domain, 200)
    } else {
        uniform_points(domain, 10_000, seed)
    }
}

/// Cell-centred `per_axis × per_axis` grid, rows of constant x₂.
pub fn grid_2d(domain: &Domain, per_axis: usize) -> Vec<Vec<f64>> {
    let step = |j: usize| (domain.upper[j] - domain.lower[j]) / per_axis as f64;
    let (s0, s1) = (step(0), step(1));
    (0..per_axis)
        .flat_map(|r| {
            (0..per_axis).map(move |c| {
                vec![
                    domain.lower[0] + (c as f64 + 0.5) * s0,
                    domain.lower[1] + (r as f64 + 0.5) * s1,
                ]
            })
        })
        .collect()
}

pub fn uniform_points(domain: &Domain, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|_| {
            domain
                .lower
                .iter()
                .zip(&domain.upper)
                .map(|(lo, hi)| if hi > lo { r.gen_range(*lo..*hi) } else { *lo })
                .collect()
        })
        .collect()
}

/// Fraction of points predicted with confidence at least `hi` for either class.
pub fn confidence_profile(model: &Classifier, points: &[Vec<f64>], hi: f64) -> Result<f64> {
    if !(hi > 0.5 && hi < 1.0) {
        return Err(Error::Input(format!("hi must lie in (0.5, 1), got {hi}")));
    }
    if points.is_empty() {
        return Err(Error::Input("no points".into()));
    }
    let mut confident = 0usize;
    for x in points {
        let (p, _) = model.forward(x)?;
        if p >= hi || p <= 1.0 - hi {
            confident += 1;
        }
    }
    Ok(confident as f64 / points.len() as f64)
}

/// Features ordered by how much explanations change them.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageRank {
    /// Feature indices, largest mean |cᵢ − xᵢ| first; ties keep index order.
    pub order: Vec<usize>,
    pub mean_abs_change: Vec<f64>,
    /// Some adjacent pair in `order` is equal within 1e-9 relative.
    pub tied: bool,
}

/// Ranks features by mean absolute change over converged explanations,
/// measured in the space given by `normalizer`.
pub fn feature_leakage_rank(results: &[CfResult], normalizer: &Normalizer) -> Result<LeakageRank> {
    let used: Vec<&CfResult> = results.iter().filter(|r| r.converged).collect();
    if used.is_empty() {
        return Err(Error::Input("no converged explanations to rank".into()));
    }
    let d = normalizer.dim();
    let mut sums = vec![0.0; d];
    for r in &used {
        let x = normalizer.apply(&r.origin)?;
        let c = normalizer.apply(&r.explanation)?;
        for (s, (a, b)) in sums.iter_mut().zip(x.iter().zip(&c)) {
            *s += (a - b).abs();
        }
    }
    let mean_abs_change: Vec<f64> = sums.iter().map(|s| s / used.len() as f64).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| mean_abs_change[b].total_cmp(&mean_abs_change[a]));
    let tied = order.windows(2).any(|w| {
        let (u, v) = (mean_abs_change[w[0]], mean_abs_change[w[1]]);
        (u - v).abs() <= 1e-9 * u.abs().max(v.abs()).max(f64::MIN_POSITIVE)
    });
    Ok(LeakageRank {
        order,
        mean_abs_change,
        tied,
    })
}

#[cfg(test)]
mod tests;
