//! The three demo scenes, independent of the browser bindings.

use std::cell::RefCell;
use std::path::Path;
use std::rc::Rc;

use rand::Rng as _;

use cfx_core::attacks::{Source, Strategy};
use cfx_core::config::{ExperimentConfig, Preset};
use cfx_core::data::{Normalizer, SYN_HIGH, SYN_LOW};
use cfx_core::eval::{run_cell, uniform_points, CloudSetup, Domain};
use cfx_core::linear::extract_linear;
use cfx_core::nn::{Activation, Layer, MlpModel};
use cfx_core::oracle::{CfConfig, CfOracle, CfResult};
use cfx_core::{rng, Classifier, Error, Result};

use crate::svg::{contour, ramp, shade, Canvas, Point, CLASS0, CLASS1};

const SIZE: f64 = 420.0;
const GRID: usize = 70;
const BOX: (Point, Point) = ((SYN_LOW, SYN_LOW), (SYN_HIGH, SYN_HIGH));

/// What each operation hands back to the page.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub svg: String,
    pub summary: String,
    /// Label agreement with the cloud, when the scene has a rebuilt model.
    pub agreement: Option<f64>,
    pub api_calls: u32,
}

thread_local! {
    static CLOUDS: RefCell<Vec<(Preset, Rc<CloudSetup>)>> = const { RefCell::new(Vec::new()) };
}

fn preset(dataset: &str) -> Result<Preset> {
    match dataset.parse()? {
        p @ (Preset::SynLinear | Preset::SynNonlinear) => Ok(p),
        other => Err(Error::Config(format!(
            "`{}` is not available in the browser",
            other.name()
        ))),
    }
}

/// Trains a preset cloud once per page and reuses it.
fn cloud(p: Preset) -> Result<Rc<CloudSetup>> {
    if let Some(c) = CLOUDS.with(|m| m.borrow().iter().find(|(k, _)| *k == p).map(|(_, c)| c.clone())) {
        return Ok(c);
    }
    let cfg = ExperimentConfig::synthetic(p)?;
    let data = cfg.dataset.load(Path::new(""))?;
    let (setup, _) = CloudSetup::train(
        &cfg.dataset.id(),
        &data,
        cfg.dataset.split_seed,
        &cfg.cloud.hidden,
        &cfg.cloud.train,
        &[],
    )?;
    let setup = Rc::new(setup);
    CLOUDS.with(|m| m.borrow_mut().push((p, setup.clone())));
    Ok(setup)
}

fn pt(x: &[f64]) -> Point {
    (x[0], x[1])
}

fn class_color(label: u8) -> &'static str {
    if label == 1 {
        CLASS1
    } else {
        CLASS0
    }
}

fn prob(c: &Classifier, p: Point) -> f64 {
    c.forward(&[p.0, p.1]).map(|(prob, _)| prob).unwrap_or(f64::NAN)
}

fn explanation_arrow(canvas: &mut Canvas, r: &CfResult) {
    canvas.line(pt(&r.origin), pt(&r.explanation), "#555", 1.0, Some("3 2"));
}

/// Runs one attack cell and draws what the attacker learned.
///
/// Cells are shaded by the cloud's label and marked red where the substitute
/// disagrees. Queries are small grey dots, explanations are coloured by the
/// label the API returned, and each CF/CCF pair is joined by a solid line.
pub fn extraction(dataset: &str, strategy: &str, queries: usize, run: usize) -> Result<Scene> {
    let p = preset(dataset)?;
    let strategy: Strategy = strategy.parse()?;
    if !(1..=128).contains(&queries) {
        return Err(Error::Config(format!("queries must be in 1..=128, got {queries}")));
    }
    let setup = cloud(p)?;
    let mut sweep = ExperimentConfig::synthetic(p)?.sweep_config();
    sweep.strategies = vec![strategy];
    sweep.query_sizes = vec![queries];
    sweep.runs_per_size = run + 1;
    sweep.jobs = 1;
    let out = run_cell(&setup, &sweep, strategy, queries, run)?;

    let (lo, hi) = BOX;
    let mut canvas = Canvas::new(lo, hi, SIZE);
    shade(&mut canvas, GRID, |q| {
        let truth = prob(&setup.cloud, q) >= 0.5;
        let fill = if (prob(&out.substitute, q) >= 0.5) != truth {
            "#e8747c"
        } else if truth {
            "#f6dcbf"
        } else {
            "#cfdff1"
        };
        fill.to_owned()
    });
    let sub_boundary = contour(lo, hi, GRID, 0.5, |q| prob(&out.substitute, q));
    canvas.segments(&sub_boundary, "#222", 1.0, Some("5 3"));
    for r in &out.set.explanations {
        explanation_arrow(&mut canvas, r);
    }
    for &(a, b) in &out.set.pairing {
        canvas.line(
            pt(&out.set.items[a].features),
            pt(&out.set.items[b].features),
            "#111",
            2.0,
            None,
        );
    }
    for q in &out.queries {
        canvas.dot(pt(q), 2.5, "#777", "none", "query");
    }
    for item in &out.set.items {
        if item.source != Source::Query {
            canvas.dot(
                pt(&item.features),
                4.0,
                class_color(item.label),
                "#111",
                item.source.name(),
            );
        }
    }
    let rec = &out.record;
    Ok(Scene {
        svg: canvas.finish(),
        summary: format!(
            "{strategy} on {}: {queries} queries, {} API calls, {} training points, {} dropped, agreement {:.3}",
            setup.dataset_id,
            rec.api_calls,
            out.set.len(),
            rec.dropped_pairs,
            rec.agreement
        ),
        agreement: Some(rec.agreement),
        api_calls: rec.api_calls as u32,
    })
}

/// Explains a clicked point, then explains the explanation.
///
/// The background is the cloud's confidence; solid contours mark the
/// decision boundary and dashed ones the two confidence levels the solver
/// aims for.
pub fn explain(dataset: &str, x1: f64, x2: f64, threshold: f64) -> Result<Scene> {
    let p = preset(dataset)?;
    let (lo, hi) = BOX;
    if !(lo.0..=hi.0).contains(&x1) || !(lo.1..=hi.1).contains(&x2) {
        return Err(Error::Input(format!("point ({x1}, {x2}) is outside the plot")));
    }
    let setup = cloud(p)?;
    let cfg = CfConfig {
        threshold,
        ..CfConfig::default()
    };
    let oracle = setup.oracle(&cfg)?;
    let (cf, ccf) = oracle.explain_of_explain(&[x1, x2])?;

    let mut canvas = Canvas::new(lo, hi, SIZE);
    shade(&mut canvas, GRID, |q| ramp(prob(&setup.cloud, q)));
    let f = |q| prob(&setup.cloud, q);
    for level in [threshold, 1.0 - threshold] {
        canvas.segments(&contour(lo, hi, 2 * GRID, level, f), "#444", 0.8, Some("2 2"));
    }
    canvas.segments(&contour(lo, hi, 2 * GRID, 0.5, f), "#111", 1.5, None);
    explanation_arrow(&mut canvas, &cf);
    explanation_arrow(&mut canvas, &ccf);
    canvas.dot((x1, x2), 5.0, "#fff", class_color(cf.origin_label), "query");
    for (r, class) in [(&cf, "cf"), (&ccf, "ccf")] {
        canvas.dot(pt(&r.explanation), 4.0, class_color(r.cf_label), "#111", class);
    }
    let leg = |name: &str, r: &CfResult| {
        if r.converged {
            format!(
                "{name} at ({:.3}, {:.3}), distance {:.4}, P(target) {:.3}",
                r.explanation[0], r.explanation[1], r.distance, r.achieved_prob
            )
        } else {
            format!("{name} did not converge")
        }
    };
    Ok(Scene {
        svg: canvas.finish(),
        summary: format!(
            "P(class 1) at query {:.3}; {}; {}",
            prob(&setup.cloud, (x1, x2)),
            leg("CF", &cf),
            leg("CF of CF", &ccf)
        ),
        agreement: None,
        api_calls: oracle.meter().total() as u32,
    })
}

/// Draws a random linear cloud on `[-1, 1]²` and recovers it from one pair.
pub fn lemma(seed: u64) -> Result<Scene> {
    let mut r = rng::seeded(seed);
    let weights: Vec<f64> = (0..2).map(|_| r.gen_range(-2.0..2.0)).collect();
    let anchor: Vec<f64> = (0..2).map(|_| r.gen_range(-0.5..0.5)).collect();
    let bias = -(weights[0] * anchor[0] + weights[1] * anchor[1]);
    let model = MlpModel::from_layers(vec![Layer {
        inputs: 2,
        outputs: 1,
        activation: Activation::Sigmoid,
        weights: weights.clone(),
        bias: vec![bias],
    }])?;
    let cloud = Classifier::new(model, Normalizer::identity(2))?;
    let oracle = CfOracle::new(cloud.clone(), CfConfig::default())?;
    let x = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
    let (cf, ccf) = oracle.explain_of_explain(&x)?;
    let recovered = if cf.converged && ccf.converged {
        Some(extract_linear(&cf.explanation, &ccf.explanation, ccf.cf_label)?)
    } else {
        None
    };

    let (lo, hi) = ((-1.0, -1.0), (1.0, 1.0));
    let mut canvas = Canvas::new(lo, hi, SIZE);
    shade(&mut canvas, GRID, |q| ramp(prob(&cloud, q)));
    let truth = |q: Point| weights[0] * q.0 + weights[1] * q.1 + bias;
    canvas.segments(&contour(lo, hi, GRID, 0.0, truth), "#111", 2.5, None);
    let domain = Domain {
        lower: vec![-1.0, -1.0],
        upper: vec![1.0, 1.0],
    };
    let (agreement, angle) = match &recovered {
        Some(lin) => {
            canvas.segments(
                &contour(lo, hi, GRID, 0.0, |q| lin.score(&[q.0, q.1])),
                "#c0392b",
                1.5,
                Some("6 4"),
            );
            let pts = uniform_points(&domain, 10_000, rng::derive_seed(seed, &[0x1e]));
            let mut same = 0usize;
            for p in &pts {
                same += usize::from(cloud.predict(p)? == lin.predict(p));
            }
            let norm = (weights[0].powi(2) + weights[1].powi(2)).sqrt();
            let cos = (lin.normal[0] * weights[0] + lin.normal[1] * weights[1]) / norm;
            (
                Some(same as f64 / pts.len() as f64),
                Some(cos.clamp(-1.0, 1.0).acos().to_degrees()),
            )
        }
        None => (None, None),
    };
    explanation_arrow(&mut canvas, &cf);
    explanation_arrow(&mut canvas, &ccf);
    canvas.dot(pt(&x), 5.0, "#fff", class_color(cf.origin_label), "query");
    for (res, class) in [(&cf, "cf"), (&ccf, "ccf")] {
        canvas.dot(pt(&res.explanation), 4.0, class_color(res.cf_label), "#111", class);
    }
    let summary = match (agreement, angle) {
        (Some(a), Some(deg)) => format!(
            "true boundary {:.3}·x1 {:+.3}·x2 {:+.3} = 0; recovered from 2 API calls, normal off by {deg:.1e} degrees, agreement {a:.4}",
            weights[0], weights[1], bias
        ),
        _ => "an explanation did not converge; nothing recovered".to_owned(),
    };
    Ok(Scene {
        svg: canvas.finish(),
        summary,
        agreement,
        api_calls: oracle.meter().total() as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_scene_recovers_the_boundary() {
        for seed in 0..5 {
            let s = lemma(seed).unwrap();
            assert_eq!(s.api_calls, 2);
            assert!(s.agreement.unwrap() > 0.999, "{seed}: {}", s.summary);
            assert!(s.svg.starts_with("<svg") && s.svg.ends_with("</svg>\n"));
            assert_eq!(s.svg.matches(r#"class="cf""#).count(), 1);
            assert_eq!(lemma(seed).unwrap(), s);
        }
    }

    #[test]
    fn extraction_scene_matches_the_cell() {
        let s = extraction("syn_linear", "dual_cf", 4, 0).unwrap();
        assert_eq!(s.api_calls, 8);
        let a = s.agreement.unwrap();
        assert!((0.0..=1.0).contains(&a));
        assert_eq!(s.svg.matches(r#"class="query""#).count(), 4);
        let setup = cloud(Preset::SynLinear).unwrap();
        let mut sweep = ExperimentConfig::synthetic(Preset::SynLinear).unwrap().sweep_config();
        sweep.query_sizes = vec![4];
        sweep.runs_per_size = 1;
        let cell = run_cell(&setup, &sweep, Strategy::DualCf, 4, 0).unwrap();
        assert_eq!(a, cell.record.agreement);
        let pairs = 4 - cell.set.dropped;
        assert_eq!(s.svg.matches(r#"class="cf""#).count(), pairs);
        assert_eq!(s.svg.matches(r#"class="ccf""#).count(), pairs);
        assert_eq!(extraction("syn_linear", "dual_cf", 4, 0).unwrap(), s);

        let steal = extraction("syn_linear", "steal_ml", 4, 0).unwrap();
        assert_eq!(steal.api_calls, 4);
        assert_eq!(steal.svg.matches(r#"class="cf""#).count(), 0);
    }

    #[test]
    fn explain_scene_crosses_the_boundary_and_back() {
        let s = explain("syn_linear", 1.0, 2.0, 0.6).unwrap();
        assert_eq!(s.api_calls, 2);
        assert_eq!(s.agreement, None);
        assert!(s.summary.contains("CF at"), "{}", s.summary);
        assert!(!s.summary.contains("did not converge"), "{}", s.summary);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(extraction("heloc", "dual_cf", 4, 0).is_err());
        assert!(extraction("syn_linear", "guess", 4, 0).is_err());
        assert!(extraction("syn_linear", "dual_cf", 0, 0).is_err());
        assert!(explain("syn_linear", 7.0, 1.0, 0.6).is_err());
        assert!(explain("syn_linear", 1.0, 1.0, 0.4).is_err());
    }
}
