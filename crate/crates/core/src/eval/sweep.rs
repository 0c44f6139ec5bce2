//! Seeded (strategy × query size × run) sweeps.
//!
//! Each cell draws its queries with a seed derived from
//! `(base_seed, query_size, run)`, so every strategy sees the same queries in
//! a given run and paired comparisons are meaningful. Substitute training is
//! seeded from `(base_seed, strategy, query_size, run)`. Neither depends on
//! which other strategies are in the sweep.

use std::io::{Read, Write};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{agreement, mean, population_std, Domain};
use crate::attacks::{self, coreset_select, train_substitute, AttackBudget, Strategy, SubstituteTrainingSet};
use crate::classifier::Classifier;
use crate::data::{self, Dataset, Normalizer, SplitSet};
use crate::nn::{self, Architecture, MlpModel, TrainConfig};
use crate::oracle::{mad_stats, CfConfig, CfOracle, Metric};
use crate::rng;
use crate::{Error, Result};

/// A trained (or loaded) cloud model with the data split it belongs to.
#[derive(Debug, Clone)]
pub struct CloudSetup {
    pub dataset_id: String,
    pub split: SplitSet,
    pub cloud: Classifier,
    pub domain: Domain,
}

impl CloudSetup {
    /// Trains the cloud model on the training split. Returns the setup and the
    /// models captured after each epoch listed in `checkpoints`.
    pub fn train(
        dataset_id: &str,
        dataset: &Dataset,
        split_seed: u64,
        hidden: &[usize],
        cfg: &TrainConfig,
        checkpoints: &[usize],
    ) -> Result<(CloudSetup, Vec<(usize, MlpModel)>)> {
        let split = data::split(dataset, split_seed)?;
        let normalizer = Normalizer::fit_dataset(&split.train)?;
        let arch = Architecture::with_hidden(dataset.dim(), hidden)?;
        let init = nn::mlp_init(&arch, rng::derive_seed(cfg.seed, &[0xc10d]))?;
        let inputs = split
            .train
            .features()
            .iter()
            .map(|x| normalizer.apply(x))
            .collect::<Result<Vec<_>>>()?;
        let mut saved = Vec::new();
        let report = nn::train_with(&init, &inputs, &split.train.labels(), cfg, &nn::Shuffled, |epoch, m| {
            if checkpoints.contains(&epoch) {
                saved.push((epoch, m.clone()));
            }
        })?;
        let cloud = Classifier::new(report.model, normalizer)?;
        let setup = CloudSetup {
            dataset_id: dataset_id.to_owned(),
            domain: Domain::of(&dataset.features())?,
            split,
            cloud,
        };
        Ok((setup, saved))
    }

    /// Rebuilds a setup around an existing cloud model.
    pub fn with_model(dataset_id: &str, dataset: &Dataset, split_seed: u64, model: MlpModel) -> Result<CloudSetup> {
        let split = data::split(dataset, split_seed)?;
        let normalizer = Normalizer::fit_dataset(&split.train)?;
        Ok(CloudSetup {
            dataset_id: dataset_id.to_owned(),
            domain: Domain::of(&dataset.features())?,
            cloud: Classifier::new(model, normalizer)?,
            split,
        })
    }

    /// Builds the API. For L1/MAD without explicit values, MAD is computed on
    /// the training split in the cloud's normalized space.
    pub fn oracle(&self, cf: &CfConfig) -> Result<CfOracle> {
        let mut cf = cf.clone();
        if cf.metric == Metric::L1Mad && cf.mad.is_none() {
            let norm = self
                .split
                .train
                .features()
                .iter()
                .map(|x| self.cloud.normalizer.apply(x))
                .collect::<Result<Vec<_>>>()?;
            cf.mad = Some(mad_stats(&norm)?);
        }
        CfOracle::new(self.cloud.clone(), cf)
    }

    pub fn eval_points(&self) -> Vec<Vec<f64>> {
        self.split.eval.features()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub strategies: Vec<Strategy>,
    pub query_sizes: Vec<usize>,
    pub runs_per_size: usize,
    pub base_seed: u64,
    pub substitute_hidden: Vec<usize>,
    /// `seed` is ignored; each cell derives its own.
    pub substitute_train: TrainConfig,
    pub cf: CfConfig,
    pub paired_batching: bool,
    /// Subsample the query split's minority class to this majority:minority ratio.
    pub imbalance_ratio: Option<f64>,
    /// Worker threads; 0 or 1 runs sequentially.
    pub jobs: usize,
}

impl SweepConfig {
    pub fn new(substitute_hidden: Vec<usize>, substitute_train: TrainConfig) -> Self {
        SweepConfig {
            strategies: vec![
                Strategy::StealMl,
                Strategy::StealMlCoreset,
                Strategy::ModelExtraction,
                Strategy::DualCf,
                Strategy::DualCfx,
            ],
            query_sizes: vec![1, 2, 4, 8, 16, 32, 64, 128],
            runs_per_size: 30,
            base_seed: 0,
            substitute_hidden,
            substitute_train,
            cf: CfConfig::default(),
            paired_batching: true,
            imbalance_ratio: None,
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs_per_size == 0 {
            return Err(Error::Config("runs_per_size must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategies selected".into()));
        }
        if self.query_sizes.is_empty() || self.query_sizes[0] == 0 {
            return Err(Error::Config("query_sizes must be positive".into()));
        }
        if self.query_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("query_sizes must be strictly ascending".into()));
        }
        self.substitute_train.validate()
    }
}

/// One (strategy, query size, run) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub dataset: String,
    pub strategy: Strategy,
    pub query_size: usize,
    pub run_seed: u64,
    pub agreement: f64,
    pub api_calls: u64,
    pub dropped_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub dataset: String,
    pub strategy: Strategy,
    pub query_size: usize,
    pub mean_agreement: f64,
    pub std_agreement: f64,
    pub mean_api_calls: f64,
}

/// Records in (strategy, query size, run) order, strategies in config order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub records: Vec<Record>,
}

impl ResultTable {
    /// Agreements of one cell group, in run order.
    pub fn agreements(&self, strategy: Strategy, query_size: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.strategy == strategy && r.query_size == query_size)
            .map(|r| r.agreement)
            .collect()
    }

    /// Per (dataset, strategy, query size) mean and population std, in first-seen order.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut keys: Vec<(String, Strategy, usize)> = Vec::new();
        for r in &self.records {
            let k = (r.dataset.clone(), r.strategy, r.query_size);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(dataset, strategy, query_size)| {
                let group: Vec<&Record> = self
                    .records
                    .iter()
                    .filter(|r| r.dataset == dataset && r.strategy == strategy && r.query_size == query_size)
                    .collect();
                let agr: Vec<f64> = group.iter().map(|r| r.agreement).collect();
                let calls: Vec<f64> = group.iter().map(|r| r.api_calls as f64).collect();
                Aggregate {
                    dataset,
                    strategy,
                    query_size,
                    mean_agreement: mean(&agr),
                    std_agreement: population_std(&agr),
                    mean_api_calls: mean(&calls),
                }
            })
            .collect()
    }

    pub fn aggregate(&self, strategy: Strategy, query_size: usize) -> Option<Aggregate> {
        self.aggregates()
            .into_iter()
            .find(|a| a.strategy == strategy && a.query_size == query_size)
    }
}

struct Cell {
    strategy: Strategy,
    query_size: usize,
    run: usize,
}

fn query_seed(base: u64, size: usize, run: usize) -> u64 {
    rng::derive_seed(base, &[0x9e5, size as u64, run as u64])
}

fn train_seed(base: u64, strategy: Strategy, size: usize, run: usize) -> u64 {
    rng::derive_seed(base, &[rng::hash_str(strategy.name()), size as u64, run as u64])
}

/// Everything a cell needs, shared read-only across workers.
struct SweepContext<'a> {
    setup: &'a CloudSetup,
    cfg: &'a SweepConfig,
    oracle: CfOracle,
    pool: Vec<Vec<f64>>,
    pool_cloud_space: Vec<Vec<f64>>,
    substitute_normalizer: Normalizer,
    eval: Vec<Vec<f64>>,
}

impl SweepContext<'_> {
    fn draw(&self, strategy: Strategy, size: usize, run: usize) -> Result<Vec<Vec<f64>>> {
        let seed = query_seed(self.cfg.base_seed, size, run);
        let idx = if strategy == Strategy::StealMlCoreset {
            coreset_select(&self.pool_cloud_space, size, seed)?
        } else {
            sample(&mut rng::seeded(seed), self.pool.len(), size).into_vec()
        };
        Ok(idx.into_iter().map(|i| self.pool[i].clone()).collect())
    }

    fn substitute(&self, set: &SubstituteTrainingSet, train: &TrainConfig) -> Result<Classifier> {
        if set.is_empty() {
            // nothing usable came back: the attacker is left with an untrained model
            let arch = Architecture::with_hidden(self.substitute_normalizer.dim(), &self.cfg.substitute_hidden)?;
            let m = nn::mlp_init(&arch, rng::derive_seed(train.seed, &[0x1a17]))?;
            return Classifier::new(m, self.substitute_normalizer.clone());
        }
        train_substitute(
            set,
            &self.cfg.substitute_hidden,
            train,
            self.cfg.paired_batching,
            &self.substitute_normalizer,
        )
    }

    fn run_cell(&self, cell: &Cell) -> Result<Record> {
        self.outcome(cell).map(|o| o.record)
    }

    fn outcome(&self, cell: &Cell) -> Result<CellOutcome> {
        let queries = self.draw(cell.strategy, cell.query_size, cell.run)?;
        let oracle = self.oracle.fork();
        let (set, budget) = attacks::execute(cell.strategy, &oracle, &queries)?;
        let seed = train_seed(self.cfg.base_seed, cell.strategy, cell.query_size, cell.run);
        let train = TrainConfig {
            seed,
            ..self.cfg.substitute_train
        };
        let substitute = self.substitute(&set, &train)?;
        let record = Record {
            dataset: self.setup.dataset_id.clone(),
            strategy: cell.strategy,
            query_size: cell.query_size,
            run_seed: seed,
            agreement: agreement(&self.setup.cloud, &substitute, &self.eval)?,
            api_calls: budget.api_calls,
            dropped_pairs: set.dropped,
        };
        Ok(CellOutcome {
            queries,
            set,
            budget,
            substitute,
            record,
        })
    }
}

fn context<'a>(setup: &'a CloudSetup, cfg: &'a SweepConfig) -> Result<SweepContext<'a>> {
    cfg.validate()?;
    let query_split = match cfg.imbalance_ratio {
        Some(ratio) => data::rebalance(&setup.split.query, ratio, rng::derive_seed(cfg.base_seed, &[0x1b])),
        None => Ok(setup.split.query.clone()),
    }?;
    let pool = query_split.features();
    let largest = *cfg.query_sizes.last().expect("validated");
    if largest > pool.len() {
        return Err(Error::Config(format!(
            "query size {largest} exceeds the {} rows of the query split",
            pool.len()
        )));
    }
    let pool_cloud_space = pool
        .iter()
        .map(|x| setup.cloud.normalizer.apply(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepContext {
        setup,
        cfg,
        oracle: setup.oracle(&cfg.cf)?,
        substitute_normalizer: Normalizer::fit(&pool)?,
        pool,
        pool_cloud_space,
        eval: setup.eval_points(),
    })
}

/// Re-runs the attack of one sweep cell and returns what the attacker
/// collected, without training. Matches the cell's sweep record.
pub fn cell_training_set(
    setup: &CloudSetup,
    cfg: &SweepConfig,
    strategy: Strategy,
    query_size: usize,
    run: usize,
) -> Result<(SubstituteTrainingSet, AttackBudget)> {
    if !cfg.query_sizes.contains(&query_size) || run >= cfg.runs_per_size {
        return Err(Error::Config(format!("no cell for size {query_size}, run {run}")));
    }
    let ctx = context(setup, cfg)?;
    let queries = ctx.draw(strategy, query_size, run)?;
    attacks::execute(strategy, &ctx.oracle.fork(), &queries)
}

/// Everything one sweep cell produced, including the trained substitute.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub queries: Vec<Vec<f64>>,
    pub set: SubstituteTrainingSet,
    pub budget: AttackBudget,
    pub substitute: Classifier,
    pub record: Record,
}

/// Runs a single cell exactly as [`run_sweep`] would.
pub fn run_cell(
    setup: &CloudSetup,
    cfg: &SweepConfig,
    strategy: Strategy,
    query_size: usize,
    run: usize,
) -> Result<CellOutcome> {
    if !cfg.query_sizes.contains(&query_size) || run >= cfg.runs_per_size {
        return Err(Error::Config(format!("no cell for size {query_size}, run {run}")));
    }
    let ctx = context(setup, cfg)?;
    ctx.outcome(&Cell {
        strategy,
        query_size,
        run,
    })
}

pub fn run_sweep(setup: &CloudSetup, cfg: &SweepConfig) -> Result<ResultTable> {
    let ctx = context(setup, cfg)?;
    let cells: Vec<Cell> = cfg
        .strategies
        .iter()
        .flat_map(|&strategy| {
            cfg.query_sizes.iter().flat_map(move |&query_size| {
                (0..cfg.runs_per_size).map(move |run| Cell {
                    strategy,
                    query_size,
                    run,
                })
            })
        })
        .collect();
    let records = run_cells(&ctx, &cells, cfg.jobs)?;
    Ok(ResultTable { records })
}

#[cfg(feature = "parallel")]
fn run_cells(ctx: &SweepContext<'_>, cells: &[Cell], jobs: usize) -> Result<Vec<Record>> {
    use rayon::prelude::*;
    if jobs <= 1 {
        return cells.iter().map(|c| ctx.run_cell(c)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| cells.par_iter().map(|c| ctx.run_cell(c)).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_cells(ctx: &SweepContext<'_>, cells: &[Cell], _jobs: usize) -> Result<Vec<Record>> {
    cells.iter().map(|c| ctx.run_cell(c)).collect()
}

const RECORD_HEADER: [&str; 7] = [
    "dataset",
    "strategy",
    "query_size",
    "run_seed",
    "agreement",
    "api_calls",
    "dropped_pairs",
];

const AGGREGATE_HEADER: [&str; 6] = [
    "dataset",
    "strategy",
    "query_size",
    "mean_agreement",
    "std_agreement",
    "mean_api_calls",
];

pub fn write_records_csv<W: Write>(table: &ResultTable, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(RECORD_HEADER)?;
    for r in &table.records {
        w.write_record([
            r.dataset.clone(),
            r.strategy.name().to_owned(),
            r.query_size.to_string(),
            r.run_seed.to_string(),
            r.agreement.to_string(),
            r.api_calls.to_string(),
            r.dropped_pairs.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn read_records_csv<R: Read>(r: R) -> Result<ResultTable> {
    let mut rd = csv::Reader::from_reader(r);
    if rd.headers()?.iter().ne(RECORD_HEADER) {
        return Err(Error::Format("unexpected result table header".into()));
    }
    let bad = |c: &str| Error::Format(format!("bad `{c}` value"));
    let mut records = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        records.push(Record {
            dataset: rec[0].to_owned(),
            strategy: rec[1].parse()?,
            query_size: rec[2].parse().map_err(|_| bad("query_size"))?,
            run_seed: rec[3].parse().map_err(|_| bad("run_seed"))?,
            agreement: rec[4].parse().map_err(|_| bad("agreement"))?,
            api_calls: rec[5].parse().map_err(|_| bad("api_calls"))?,
            dropped_pairs: rec[6].parse().map_err(|_| bad("dropped_pairs"))?,
        });
    }
    Ok(ResultTable { records })
}

pub fn write_aggregates_csv<W: Write>(aggregates: &[Aggregate], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(AGGREGATE_HEADER)?;
    for a in aggregates {
        w.write_record([
            a.dataset.clone(),
            a.strategy.name().to_owned(),
            a.query_size.to_string(),
            a.mean_agreement.to_string(),
            a.std_agreement.to_string(),
            a.mean_api_calls.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn read_aggregates_csv<R: Read>(r: R) -> Result<Vec<Aggregate>> {
    let mut rd = csv::Reader::from_reader(r);
    if rd.headers()?.iter().ne(AGGREGATE_HEADER) {
        return Err(Error::Format("unexpected aggregates header".into()));
    }
    let bad = |c: &str| Error::Format(format!("bad `{c}` value"));
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        out.push(Aggregate {
            dataset: rec[0].to_owned(),
            strategy: rec[1].parse()?,
            query_size: rec[2].parse().map_err(|_| bad("query_size"))?,
            mean_agreement: rec[3].parse().map_err(|_| bad("mean_agreement"))?,
            std_agreement: rec[4].parse().map_err(|_| bad("std_agreement"))?,
            mean_api_calls: rec[5].parse().map_err(|_| bad("mean_api_calls"))?,
        });
    }
    Ok(out)
}
