use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::oracle::CfResult;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Query,
    Cf,
    Ccf,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Query => "query",
            Source::Cf => "cf",
            Source::Ccf => "ccf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingItem {
    pub features: Vec<f64>,
    pub label: u8,
    pub source: Source,
}

/// Labeled points collected by an attack, plus CF/CCF pair indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubstituteTrainingSet {
    pub items: Vec<TrainingItem>,
    /// `(cf_index, ccf_index)` into `items`; empty when the strategy pairs nothing.
    pub pairing: Vec<(usize, usize)>,
    /// Explanations or pairs discarded because the solver did not converge.
    pub dropped: usize,
    /// Every explanation the API returned, in call order.
    pub explanations: Vec<CfResult>,
}

impl SubstituteTrainingSet {
    pub(crate) fn push(&mut self, features: Vec<f64>, label: u8, source: Source) -> usize {
        self.items.push(TrainingItem {
            features,
            label,
            source,
        });
        self.items.len() - 1
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.items.iter().map(|i| i.features.clone()).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.items.iter().map(|i| i.label).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.items.iter().filter(|i| i.label == 1).count();
        [self.items.len() - ones, ones]
    }

    /// Pair indices in range, pairwise disjoint, and labels opposite.
    pub fn validate(&self) -> Result<()> {
        let mut used = vec![false; self.items.len()];
        for &(a, b) in &self.pairing {
            for i in [a, b] {
                if i >= self.items.len() {
                    return Err(Error::Input(format!("pair index {i} out of range")));
                }
                if std::mem::replace(&mut used[i], true) {
                    return Err(Error::Input(format!("item {i} appears in two pairs")));
                }
            }
            if self.items[a].label == self.items[b].label {
                return Err(Error::Input(format!("pair ({a}, {b}) has equal labels")));
            }
        }
        Ok(())
    }
}

/// Items CSV (`f_<i>…, label, source`) and a sidecar pairing CSV (`cf_index, ccf_index`).
pub fn write_training_set<W: Write, P: Write>(set: &SubstituteTrainingSet, items: W, pairing: P) -> Result<()> {
    let dim = set.items.first().map(|i| i.features.len()).unwrap_or(0);
    let mut w = csv::Writer::from_writer(items);
    let mut header: Vec<String> = (0..dim).map(|i| format!("f_{i}")).collect();
    header.push("label".into());
    header.push("source".into());
    w.write_record(&header)?;
    for item in &set.items {
        let mut rec: Vec<String> = item.features.iter().map(f64::to_string).collect();
        rec.push(item.label.to_string());
        rec.push(item.source.name().into());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;

    let mut p = csv::Writer::from_writer(pairing);
    p.write_record(["cf_index", "ccf_index"])?;
    for (a, b) in &set.pairing {
        p.write_record([a.to_string(), b.to_string()])?;
    }
    p.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn read_training_set<R: Read, P: Read>(items: R, pairing: P) -> Result<SubstituteTrainingSet> {
    let bad = |what: &str| Error::Format(format!("training set: bad {what}"));
    let mut set = SubstituteTrainingSet::default();
    let mut rd = csv::Reader::from_reader(items);
    let width = rd.headers()?.len();
    if width < 2 {
        return Err(bad("header"));
    }
    for rec in rd.records() {
        let rec = rec?;
        let features = (0..width - 2)
            .map(|i| rec[i].parse::<f64>().map_err(|_| bad("feature")))
            .collect::<Result<Vec<_>>>()?;
        let label = rec[width - 2].parse::<u8>().map_err(|_| bad("label"))?;
        let source = match &rec[width - 1] {
            "query" => Source::Query,
            "cf" => Source::Cf,
            "ccf" => Source::Ccf,
            _ => return Err(bad("source")),
        };
        set.push(features, label, source);
    }
    let mut rd = csv::Reader::from_reader(pairing);
    for rec in rd.records() {
        let rec = rec?;
        let a = rec[0].parse().map_err(|_| bad("pair index"))?;
        let b = rec[1].parse().map_err(|_| bad("pair index"))?;
        set.pairing.push((a, b));
    }
    set.validate()?;
    Ok(set)
}
