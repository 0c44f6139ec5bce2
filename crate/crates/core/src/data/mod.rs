//! Labeled tabular data: generators, CSV ingestion, splits and scaling.

mod csv_io;
mod normalize;
mod synthetic;

use std::path::PathBuf;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, write_csv};
pub use normalize::Normalizer;
pub use synthetic::{gen_syn_linear, gen_syn_nonlinear, syn_linear_label, syn_nonlinear_label, SYN_HIGH, SYN_LOW};

use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub features: Vec<f64>,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    SyntheticLinear,
    SyntheticNonlinear,
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    rows: Vec<Row>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, rows: Vec<Row>, provenance: Provenance) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Input("dataset is empty".into()));
        }
        let d = feature_names.len();
        if let Some(i) = rows.iter().position(|r| r.features.len() != d) {
            return Err(Error::Input(format!(
                "row {i} has {} features, expected {d}",
                rows[i].features.len()
            )));
        }
        if rows.iter().any(|r| r.label > 1) {
            return Err(Error::Input("labels must be 0 or 1".into()));
        }
        Ok(Dataset {
            feature_names,
            rows,
            provenance,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features.clone()).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.rows.iter().filter(|r| r.label == 1).count();
        [self.rows.len() - ones, ones]
    }

    /// Same features, labels replaced (e.g. by a cloud model's predictions).
    pub fn relabeled(&self, labels: &[u8]) -> Result<Dataset> {
        if labels.len() != self.rows.len() {
            return Err(Error::Input("label count does not match row count".into()));
        }
        let rows = self
            .rows
            .iter()
            .zip(labels)
            .map(|(r, &label)| Row {
                features: r.features.clone(),
                label,
            })
            .collect();
        Dataset::new(self.feature_names.clone(), rows, self.provenance.clone())
    }

    fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.feature_names.clone(),
            idx.iter().map(|&i| self.rows[i].clone()).collect(),
            self.provenance.clone(),
        )
    }
}

/// Training, query and evaluation partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSet {
    pub train: Dataset,
    pub query: Dataset,
    pub eval: Dataset,
}

/// Seeded shuffle followed by a contiguous 50/25/25 cut.
///
/// Query and evaluation parts each get `round(n / 4)` rows (halves rounded
/// up); the remainder goes to training, so `n = 101` gives `(51, 25, 25)`.
pub fn split(dataset: &Dataset, seed: u64) -> Result<SplitSet> {
    let n = dataset.len();
    if n < 8 {
        return Err(Error::Input(format!("cannot split {n} rows; need at least 8")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(seed));
    let quarter = (n + 2) / 4;
    let n_train = n - 2 * quarter;
    Ok(SplitSet {
        train: dataset.subset(&idx[..n_train])?,
        query: dataset.subset(&idx[n_train..n_train + quarter])?,
        eval: dataset.subset(&idx[n_train + quarter..])?,
    })
}

/// Keeps the larger class whole and subsamples the other so that
/// `majority / minority ≈ ratio`. Ties treat class 0 as the majority.
/// Already more skewed datasets are returned unchanged.
pub fn rebalance(dataset: &Dataset, ratio: f64, seed: u64) -> Result<Dataset> {
    if !(ratio >= 1.0 && ratio.is_finite()) {
        return Err(Error::Config(format!("imbalance ratio must be ≥ 1, got {ratio}")));
    }
    let [zeros, ones] = dataset.class_counts();
    let minority: u8 = if ones > zeros { 0 } else { 1 };
    let n_major = zeros.max(ones);
    let target = ((n_major as f64 / ratio).round() as usize).max(1);
    let mut minority_idx: Vec<usize> = (0..dataset.len())
        .filter(|&i| dataset.rows[i].label == minority)
        .collect();
    if minority_idx.len() <= target {
        return Ok(dataset.clone());
    }
    minority_idx.shuffle(&mut rng::seeded(seed));
    let mut keep_mask: Vec<bool> = dataset.rows.iter().map(|r| r.label != minority).collect();
    for &i in &minority_idx[..target] {
        keep_mask[i] = true;
    }
    let keep: Vec<usize> = (0..dataset.len()).filter(|&i| keep_mask[i]).collect();
    dataset.subset(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(n: usize) -> Dataset {
        let rows = (0..n)
            .map(|i| Row {
                features: vec![i as f64],
                label: (i % 3 == 0) as u8,
            })
            .collect();
        Dataset::new(vec!["i".into()], rows, Provenance::SyntheticLinear).unwrap()
    }

    #[test]
    fn split_sizes() {
        for (n, expected) in [(100, (50, 25, 25)), (101, (51, 25, 25)), (8, (4, 2, 2))] {
            let s = split(&toy(n), 3).unwrap();
            assert_eq!((s.train.len(), s.query.len(), s.eval.len()), expected);
        }
        assert!(split(&toy(7), 0).is_err());
    }

    proptest! {
        #[test]
        fn split_is_an_exact_partition(n in 8usize..300, seed in any::<u64>()) {
            let d = toy(n);
            let s = split(&d, seed).unwrap();
            let mut seen: Vec<i64> = s.train.rows().iter()
                .chain(s.query.rows())
                .chain(s.eval.rows())
                .map(|r| r.features[0] as i64)
                .collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n as i64).collect::<Vec<_>>());
            for (part, share) in [(&s.train, 0.5), (&s.query, 0.25), (&s.eval, 0.25)] {
                prop_assert!((part.len() as f64 - share * n as f64).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn split_is_deterministic() {
        let d = toy(50);
        assert_eq!(split(&d, 5).unwrap(), split(&d, 5).unwrap());
        assert_ne!(split(&d, 5).unwrap(), split(&d, 6).unwrap());
    }

    #[test]
    fn rebalance_reaches_ratio() {
        // 100 rows, 50/50
        let rows = (0..100)
            .map(|i| Row {
                features: vec![i as f64],
                label: (i % 2) as u8,
            })
            .collect();
        let d = Dataset::new(vec!["i".into()], rows, Provenance::SyntheticLinear).unwrap();
        let r = rebalance(&d, 5.0, 1).unwrap();
        assert_eq!(r.class_counts(), [50, 10]);
        assert_eq!(rebalance(&d, 1.0, 1).unwrap(), d);
        assert!(rebalance(&d, 0.5, 1).is_err());
    }

    #[test]
    fn dataset_validation() {
        let bad = vec![
            Row {
                features: vec![1.0],
                label: 0,
            },
            Row {
                features: vec![1.0, 2.0],
                label: 1,
            },
        ];
        assert!(Dataset::new(vec!["a".into()], bad, Provenance::SyntheticLinear).is_err());
        assert!(Dataset::new(vec!["a".into()], vec![], Provenance::SyntheticLinear).is_err());
    }
}
