//! Querying strategies and substitute-model training.
//!
//! Each strategy turns a list of attacker queries into a
//! [`SubstituteTrainingSet`] by talking to a [`CfOracle`]:
//!
//! | strategy            | training items             | API calls per query |
//! |---------------------|----------------------------|---------------------|
//! | Steal-ML            | `(x, f(x))`                | 1 predict           |
//! | Steal-ML (CoreSet)  | `(x, f(x))`, spread-out x  | 1 predict           |
//! | Model Extraction    | `(x, f(x)), (c, f(c))`     | 1 explain           |
//! | DualCF              | `(c, f(c)), (c′, f(c′))`   | 2 explain           |
//! | DualCFX             | DualCF plus `(x, f(x))`    | 2 explain           |

mod coreset;
mod set;
mod substitute;

use serde::{Deserialize, Serialize};

pub use coreset::coreset_select;
pub use set::{read_training_set, write_training_set, Source, SubstituteTrainingSet, TrainingItem};
pub use substitute::{train_substitute, PairedOrder};

use crate::oracle::{CfOracle, MeterReading};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    StealMl,
    StealMlCoreset,
    ModelExtraction,
    DualCf,
    DualCfx,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::StealMl,
        Strategy::StealMlCoreset,
        Strategy::ModelExtraction,
        Strategy::DualCf,
        Strategy::DualCfx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::StealMl => "steal_ml",
            Strategy::StealMlCoreset => "steal_ml_coreset",
            Strategy::ModelExtraction => "model_extraction",
            Strategy::DualCf => "dual_cf",
            Strategy::DualCfx => "dual_cfx",
        }
    }

    pub fn uses_explanations(self) -> bool {
        matches!(self, Strategy::ModelExtraction | Strategy::DualCf | Strategy::DualCfx)
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

/// Attack cost: attempted initial queries and billed API calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttackBudget {
    pub initial_queries: u64,
    pub api_calls: u64,
}

impl AttackBudget {
    fn new(initial_queries: usize, before: MeterReading, after: MeterReading) -> Self {
        AttackBudget {
            initial_queries: initial_queries as u64,
            api_calls: after.since(before).total(),
        }
    }
}

fn require_queries(queries: &[Vec<f64>]) -> Result<()> {
    if queries.is_empty() {
        return Err(Error::Input("no queries given".into()));
    }
    Ok(())
}

/// Labels each query with the cloud prediction.
pub fn steal_ml(oracle: &CfOracle, queries: &[Vec<f64>]) -> Result<SubstituteTrainingSet> {
    require_queries(queries)?;
    let mut set = SubstituteTrainingSet::default();
    for x in queries {
        let (label, _) = oracle.predict(x)?;
        set.push(x.clone(), label, Source::Query);
    }
    Ok(set)
}

/// Uses each query together with its counterfactual. One explain call per
/// query returns both the prediction and the explanation. Non-converged
/// explanations contribute only the query.
pub fn model_extraction(oracle: &CfOracle, queries: &[Vec<f64>]) -> Result<SubstituteTrainingSet> {
    require_queries(queries)?;
    let mut set = SubstituteTrainingSet::default();
    for x in queries {
        let cf = oracle.explain(x)?;
        set.push(x.clone(), cf.origin_label, Source::Query);
        if cf.converged {
            set.push(cf.explanation.clone(), cf.cf_label, Source::Cf);
        } else {
            set.dropped += 1;
        }
        set.explanations.push(cf);
    }
    Ok(set)
}

/// Uses the CF of each query and the CF of that CF as a training pair.
///
/// With `include_x` (DualCFX) the query itself is added too; its label is the
/// prediction already returned with the first explanation, so no extra call
/// is made. A pair with a non-converged leg is dropped entirely.
pub fn dual_cf(oracle: &CfOracle, queries: &[Vec<f64>], include_x: bool) -> Result<SubstituteTrainingSet> {
    require_queries(queries)?;
    let mut set = SubstituteTrainingSet::default();
    for x in queries {
        let (cf, ccf) = oracle.explain_of_explain(x)?;
        let valid = cf.converged && ccf.converged && cf.cf_label != ccf.cf_label;
        if valid {
            let a = set.push(cf.explanation.clone(), cf.cf_label, Source::Cf);
            let b = set.push(ccf.explanation.clone(), ccf.cf_label, Source::Ccf);
            set.pairing.push((a, b));
            if include_x {
                set.push(x.clone(), ccf.cf_label, Source::Query);
            }
        } else {
            set.dropped += 1;
            if include_x {
                set.push(x.clone(), cf.origin_label, Source::Query);
            }
        }
        set.explanations.push(cf);
        set.explanations.push(ccf);
    }
    Ok(set)
}

/// Runs `strategy` on `queries` and reports the meter delta.
///
/// For [`Strategy::StealMlCoreset`] the queries are taken as given; the
/// CoreSet selection happens when the queries are drawn.
pub fn execute(
    strategy: Strategy,
    oracle: &CfOracle,
    queries: &[Vec<f64>],
) -> Result<(SubstituteTrainingSet, AttackBudget)> {
    let before = oracle.meter();
    let set = match strategy {
        Strategy::StealMl | Strategy::StealMlCoreset => steal_ml(oracle, queries)?,
        Strategy::ModelExtraction => model_extraction(oracle, queries)?,
        Strategy::DualCf => dual_cf(oracle, queries, false)?,
        Strategy::DualCfx => dual_cf(oracle, queries, true)?,
    };
    Ok((set, AttackBudget::new(queries.len(), before, oracle.meter())))
}
