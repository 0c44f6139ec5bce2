//! Experiment definitions: one structured file fully determines a run.
//!
//! The schema is plain serde; any self-describing text format works. Unknown
//! keys are rejected at every level. [`ExperimentConfig::validate`] reports
//! problems with the dotted path of the offending field.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attacks::Strategy;
use crate::data::{self, Dataset};
use crate::eval::SweepConfig;
use crate::nn::TrainConfig;
use crate::oracle::{CfConfig, Metric};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub cloud: CloudConfig,
    #[serde(default)]
    pub cf: CfConfig,
    pub attack: AttackConfig,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    SynLinear,
    SynNonlinear,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    /// Identifier written to result tables; defaults to the kind or file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub split_seed: u64,
    /// CSV only. Relative paths resolve against the config file's directory.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub label_column: Option<String>,
    #[serde(default = "default_positive")]
    pub positive_label: String,
}

fn default_samples() -> usize {
    2000
}

fn default_positive() -> String {
    "1".into()
}

impl DatasetConfig {
    pub fn id(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match self.kind {
            DatasetKind::SynLinear => "syn_linear".into(),
            DatasetKind::SynNonlinear => "syn_nonlinear".into(),
            DatasetKind::Csv => self
                .path
                .as_deref()
                .and_then(Path::file_stem)
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".into()),
        }
    }

    pub fn load(&self, base_dir: &Path) -> Result<Dataset> {
        match self.kind {
            DatasetKind::SynLinear => data::gen_syn_linear(self.n_samples, self.seed),
            DatasetKind::SynNonlinear => data::gen_syn_nonlinear(self.n_samples, self.seed),
            DatasetKind::Csv => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("dataset.path: required for csv datasets".into()))?;
                let label = self
                    .label_column
                    .as_deref()
                    .ok_or_else(|| Error::Config("dataset.label_column: required for csv datasets".into()))?;
                data::load_csv(&base_dir.join(path), label, &self.positive_label)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudConfig {
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub train: TrainConfig,
    /// Epochs after which a copy of the model is saved.
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    /// Existing cloud model to use instead of the one `train-cloud` writes.
    #[serde(default)]
    pub model_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "yes")]
    pub paired_batching: bool,
}

fn default_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub query_sizes: Vec<usize>,
    pub runs_per_size: usize,
    pub base_seed: u64,
    pub imbalance_ratio: Option<f64>,
    /// Ratio used by the imbalance ablation's second variant.
    pub ablation_imbalance_ratio: f64,
    pub jobs: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            query_sizes: vec![1, 2, 4, 8, 16, 32, 64, 128],
            runs_per_size: 30,
            base_seed: 0,
            imbalance_ratio: None,
            ablation_imbalance_ratio: 5.0,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Output root; the command line and `CFX_OUT_DIR` take precedence.
    pub dir: Option<PathBuf>,
}

/// Architectures and training settings for the five benchmark datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    SynLinear,
    SynNonlinear,
    Gmsc,
    Heloc,
    Boston,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::SynLinear,
        Preset::SynNonlinear,
        Preset::Gmsc,
        Preset::Heloc,
        Preset::Boston,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SynLinear => "syn_linear",
            Preset::SynNonlinear => "syn_nonlinear",
            Preset::Gmsc => "gmsc",
            Preset::Heloc => "heloc",
            Preset::Boston => "boston",
        }
    }

    pub fn hidden(self) -> Vec<usize> {
        match self {
            Preset::SynLinear => vec![10],
            _ => vec![20, 10],
        }
    }

    pub fn train(self) -> TrainConfig {
        let (learning_rate, epochs) = match self {
            Preset::SynLinear => (0.005, 200),
            Preset::SynNonlinear => (0.005, 500),
            Preset::Gmsc | Preset::Heloc => (0.01, 200),
            Preset::Boston => (0.005, 200),
        };
        TrainConfig {
            learning_rate,
            epochs,
            batch_size: 32,
            ..TrainConfig::default()
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}

impl ExperimentConfig {
    /// Full default experiment on one of the synthetic datasets. Cloud and
    /// substitute share the preset architecture and settings.
    pub fn synthetic(preset: Preset) -> Result<Self> {
        let kind = match preset {
            Preset::SynLinear => DatasetKind::SynLinear,
            Preset::SynNonlinear => DatasetKind::SynNonlinear,
            other => {
                return Err(Error::Config(format!(
                    "`{}` needs a csv dataset; only synthetic presets are self-contained",
                    other.name()
                )))
            }
        };
        Ok(ExperimentConfig {
            dataset: DatasetConfig {
                kind,
                name: None,
                n_samples: default_samples(),
                seed: 0,
                split_seed: 0,
                path: None,
                label_column: None,
                positive_label: default_positive(),
            },
            cloud: CloudConfig {
                hidden: preset.hidden(),
                train: TrainConfig {
                    seed: 1,
                    ..preset.train()
                },
                checkpoints: Vec::new(),
                model_path: None,
            },
            cf: CfConfig::default(),
            attack: AttackConfig {
                strategies: default_strategies(),
                hidden: preset.hidden(),
                train: preset.train(),
                paired_batching: true,
            },
            sweep: SweepSection::default(),
            output: OutputConfig::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        if d.kind == DatasetKind::Csv {
            if d.path.is_none() {
                return Err(Error::Config("dataset.path: required for csv datasets".into()));
            }
            if d.label_column.is_none() {
                return Err(Error::Config("dataset.label_column: required for csv datasets".into()));
            }
        } else if d.n_samples < 8 {
            return Err(Error::Config("dataset.n_samples: need at least 8 rows".into()));
        }

        check_hidden("cloud.hidden", &self.cloud.hidden)?;
        self.cloud.train.validate().map_err(at("cloud.train"))?;
        let cp = &self.cloud.checkpoints;
        if cp.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("cloud.checkpoints: must be strictly ascending".into()));
        }
        if let Some(&bad) = cp.iter().find(|&&e| e == 0 || e > self.cloud.train.epochs) {
            return Err(Error::Config(format!(
                "cloud.checkpoints: epoch {bad} is outside 1..={}",
                self.cloud.train.epochs
            )));
        }

        validate_cf(&self.cf).map_err(at("cf"))?;

        let a = &self.attack;
        if a.strategies.is_empty() {
            return Err(Error::Config("attack.strategies: select at least one".into()));
        }
        check_hidden("attack.hidden", &a.hidden)?;
        a.train.validate().map_err(at("attack.train"))?;
        if a.paired_batching && a.train.batch_size % 2 == 1 {
            return Err(Error::Config(
                "attack.train.batch_size: must be even when paired_batching is on".into(),
            ));
        }

        let s = &self.sweep;
        if s.query_sizes.is_empty() || s.query_sizes.contains(&0) {
            return Err(Error::Config(
                "sweep.query_sizes: must be non-empty and positive".into(),
            ));
        }
        if s.query_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("sweep.query_sizes: must be strictly ascending".into()));
        }
        if s.runs_per_size == 0 {
            return Err(Error::Config("sweep.runs_per_size: must be at least 1".into()));
        }
        if let Some(r) = s.imbalance_ratio {
            check_ratio("sweep.imbalance_ratio", r)?;
        }
        check_ratio("sweep.ablation_imbalance_ratio", s.ablation_imbalance_ratio)
    }

    /// The main sweep this config describes.
    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            strategies: self.attack.strategies.clone(),
            query_sizes: self.sweep.query_sizes.clone(),
            runs_per_size: self.sweep.runs_per_size,
            base_seed: self.sweep.base_seed,
            substitute_hidden: self.attack.hidden.clone(),
            substitute_train: self.attack.train,
            cf: self.cf.clone(),
            paired_batching: self.attack.paired_batching,
            imbalance_ratio: self.sweep.imbalance_ratio,
            jobs: self.sweep.jobs,
        }
    }
}

fn at(path: &'static str) -> impl Fn(Error) -> Error {
    move |e| prefix(path, e)
}

fn prefix(path: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{path}: {m}")),
        other => other,
    }
}

fn check_hidden(path: &str, hidden: &[usize]) -> Result<()> {
    if hidden.is_empty() || hidden.contains(&0) {
        return Err(Error::Config(format!(
            "{path}: need at least one non-empty hidden layer"
        )));
    }
    Ok(())
}

fn check_ratio(path: &str, r: f64) -> Result<()> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::Config(format!("{path}: ratio must be at least 1, got {r}")));
    }
    Ok(())
}

/// MAD values may be left out for L1/MAD; they are then measured on the data.
fn validate_cf(cf: &CfConfig) -> Result<()> {
    let mut probe = cf.clone();
    if probe.metric == Metric::L1Mad && probe.mad.is_none() {
        probe.metric = Metric::L1;
    }
    let dim = probe.mad.as_ref().map_or(0, Vec::len);
    probe.validate(dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    Capacity,
    Threshold,
    Metric,
    Imbalance,
    Shuffle,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::Capacity,
        Ablation::Threshold,
        Ablation::Metric,
        Ablation::Imbalance,
        Ablation::Shuffle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Capacity => "capacity",
            Ablation::Threshold => "threshold",
            Ablation::Metric => "metric",
            Ablation::Imbalance => "imbalance",
            Ablation::Shuffle => "shuffle",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown ablation `{s}`; expected one of capacity, threshold, metric, imbalance, shuffle"
            ))
        })
    }
}

/// One point on an ablation axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub label: String,
    pub sweep: SweepConfig,
}

/// Substitute architectures for the capacity study: the base, half the
/// last hidden layer's width, 1.5× that width, and one extra layer of the
/// same width.
pub fn capacity_variants(hidden: &[usize]) -> Vec<(&'static str, Vec<usize>)> {
    let last = *hidden.last().expect("non-empty hidden layers");
    let with_last = |w: usize| {
        let mut h = hidden.to_vec();
        *h.last_mut().expect("non-empty") = w.max(1);
        h
    };
    let mut deeper = hidden.to_vec();
    deeper.push(last);
    vec![
        ("base", hidden.to_vec()),
        ("remove_nodes", with_last(last / 2)),
        ("add_nodes", with_last(last + last / 2)),
        ("add_layer", deeper),
    ]
}

/// Expands `ablation` into one sweep per variant. Threshold and shuffle
/// studies run DualCF only; the others keep the configured strategies.
pub fn ablation_variants(cfg: &ExperimentConfig, ablation: Ablation) -> Vec<Variant> {
    let base = cfg.sweep_config();
    let dual_only = SweepConfig {
        strategies: vec![Strategy::DualCf],
        ..base.clone()
    };
    match ablation {
        Ablation::Capacity => capacity_variants(&cfg.attack.hidden)
            .into_iter()
            .map(|(label, hidden)| Variant {
                label: label.into(),
                sweep: SweepConfig {
                    substitute_hidden: hidden,
                    ..base.clone()
                },
            })
            .collect(),
        Ablation::Threshold => [0.6, 0.7, 0.8, 0.9]
            .into_iter()
            .map(|t| {
                let mut s = dual_only.clone();
                s.cf.threshold = t;
                Variant {
                    label: format!("threshold_{t}"),
                    sweep: s,
                }
            })
            .collect(),
        Ablation::Metric => Metric::ALL
            .into_iter()
            .map(|m| {
                let mut s = base.clone();
                s.cf.metric = m;
                if m != Metric::L1Mad {
                    s.cf.mad = None;
                }
                Variant {
                    label: m.name().into(),
                    sweep: s,
                }
            })
            .collect(),
        Ablation::Imbalance => {
            let r = cfg.sweep.ablation_imbalance_ratio;
            vec![
                Variant {
                    label: "as_loaded".into(),
                    sweep: SweepConfig {
                        imbalance_ratio: None,
                        ..base.clone()
                    },
                },
                Variant {
                    label: format!("ratio_{r}"),
                    sweep: SweepConfig {
                        imbalance_ratio: Some(r),
                        ..base
                    },
                },
            ]
        }
        Ablation::Shuffle => [("paired", true), ("shuffled", false)]
            .into_iter()
            .map(|(label, paired)| Variant {
                label: label.into(),
                sweep: SweepConfig {
                    paired_batching: paired,
                    ..dual_only.clone()
                },
            })
            .collect(),
    }
}
