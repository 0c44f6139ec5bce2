use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One counterfactual explanation as returned by the API (raw feature space).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfResult {
    pub origin: Vec<f64>,
    pub explanation: Vec<f64>,
    pub origin_label: u8,
    pub cf_label: u8,
    /// Probability of the target class at the explanation.
    pub achieved_prob: f64,
    /// Proximity cost in the solver's normalized space.
    pub distance: f64,
    pub steps_used: usize,
    pub converged: bool,
}

impl CfResult {
    pub fn target_class(&self) -> u8 {
        1 - self.origin_label
    }
}

/// CSV with columns `x_<name>…, c_<name>…, origin_label, cf_label,
/// achieved_prob, distance, steps, converged`.
pub fn write_cf_results<W: Write>(results: &[CfResult], feature_names: &[String], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    let mut header: Vec<String> = feature_names.iter().map(|n| format!("x_{n}")).collect();
    header.extend(feature_names.iter().map(|n| format!("c_{n}")));
    header.extend(
        [
            "origin_label",
            "cf_label",
            "achieved_prob",
            "distance",
            "steps",
            "converged",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for r in results {
        if r.origin.len() != feature_names.len() || r.explanation.len() != feature_names.len() {
            return Err(Error::Input("result dimension does not match feature names".into()));
        }
        let mut rec: Vec<String> = r.origin.iter().chain(&r.explanation).map(f64::to_string).collect();
        rec.push(r.origin_label.to_string());
        rec.push(r.cf_label.to_string());
        rec.push(r.achieved_prob.to_string());
        rec.push(r.distance.to_string());
        rec.push(r.steps_used.to_string());
        rec.push(r.converged.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn read_cf_results<R: Read>(r: R) -> Result<Vec<CfResult>> {
    let mut rd = csv::Reader::from_reader(r);
    let width = rd.headers()?.len();
    if width < 8 || (width - 6) % 2 != 0 {
        return Err(Error::Format("unexpected CF result header".into()));
    }
    let d = (width - 6) / 2;
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Format(format!("bad number `{s}`"))) };
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let vals: Vec<&str> = rec.iter().collect();
        let feats = vals[..2 * d].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
        let parse_u8 = |s: &str| s.parse::<u8>().map_err(|_| Error::Format(format!("bad label `{s}`")));
        out.push(CfResult {
            origin: feats[..d].to_vec(),
            explanation: feats[d..].to_vec(),
            origin_label: parse_u8(vals[2 * d])?,
            cf_label: parse_u8(vals[2 * d + 1])?,
            achieved_prob: num(vals[2 * d + 2])?,
            distance: num(vals[2 * d + 3])?,
            steps_used: vals[2 * d + 4]
                .parse()
                .map_err(|_| Error::Format("bad step count".into()))?,
            converged: vals[2 * d + 5] == "true",
        });
    }
    Ok(out)
}
