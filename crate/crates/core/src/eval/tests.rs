use super::*;
use crate::attacks::Strategy;
use crate::data::gen_syn_linear;
use crate::nn::{Activation, Layer, MlpModel, TrainConfig};
use crate::oracle::CfConfig;

fn linear(theta: &[f64], b: f64) -> Classifier {
    let m = MlpModel::from_layers(vec![Layer {
        inputs: theta.len(),
        outputs: 1,
        activation: Activation::Sigmoid,
        weights: theta.to_vec(),
        bias: vec![b],
    }])
    .unwrap();
    Classifier::new(m, Normalizer::identity(theta.len())).unwrap()
}

fn square() -> Domain {
    Domain {
        lower: vec![0.0, 0.0],
        upper: vec![6.0, 6.0],
    }
}

#[test]
fn agreement_with_self_is_one() {
    let a = linear(&[1.0, 1.0], -6.0);
    let pts = grid_2d(&square(), 50);
    assert_eq!(agreement(&a, &a, &pts).unwrap(), 1.0);
}

#[test]
fn agreement_with_complement_is_zero() {
    // negation flips every label except exactly on the boundary, which is
    // shifted off the grid
    let a = linear(&[1.0, 1.0], -6.001);
    let b = linear(&[-1.0, -1.0], 6.001);
    let pts = grid_2d(&square(), 51);
    assert_eq!(agreement(&a, &b, &pts).unwrap(), 0.0);
}

#[test]
fn agreement_is_symmetric_and_counts_halves() {
    // x1 > 3 vs x2 > 3 agree on two of four quadrants
    let a = linear(&[1.0, 0.0], -3.0);
    let b = linear(&[0.0, 1.0], -3.0);
    let pts = grid_2d(&square(), 100);
    let ab = agreement(&a, &b, &pts).unwrap();
    assert_eq!(ab, agreement(&b, &a, &pts).unwrap());
    assert_eq!(ab, 0.5);
    assert_eq!(boundary_shift(&a, &b, &pts).unwrap(), 0.5);
}

#[test]
fn agreement_rejects_empty_and_mismatched() {
    let a = linear(&[1.0, 0.0], -3.0);
    assert!(agreement(&a, &a, &[]).is_err());
    let c = linear(&[1.0, 0.0, 0.0], -3.0);
    assert!(agreement(&a, &c, &[vec![1.0, 1.0]]).is_err());
}

#[test]
fn grid_has_expected_shape() {
    let g = grid_2d(&square(), 200);
    assert_eq!(g.len(), 40_000);
    assert_eq!(g[0], vec![0.015, 0.015]);
    assert!(g.iter().all(|p| p.iter().all(|v| *v > 0.0 && *v < 6.0)));
    assert_eq!(probe_points(&square(), 1).len(), 40_000);
}

#[test]
fn uniform_points_stay_in_box_and_repeat() {
    let d = Domain {
        lower: vec![-1.0, 0.0, 2.0],
        upper: vec![1.0, 5.0, 2.0],
    };
    let p = uniform_points(&d, 500, 9);
    assert_eq!(p, uniform_points(&d, 500, 9));
    for x in &p {
        assert!((-1.0..1.0).contains(&x[0]) && (0.0..5.0).contains(&x[1]));
        assert_eq!(x[2], 2.0);
    }
    assert_eq!(probe_points(&d, 3).len(), 10_000);
}

#[test]
fn confidence_profile_extremes() {
    let zero = linear(&[0.0, 0.0], 0.0);
    let pts = grid_2d(&square(), 20);
    assert_eq!(confidence_profile(&zero, &pts, 0.9).unwrap(), 0.0);
    // every point other than p == 0.5 exactly clears a hair above 0.5
    let steep = linear(&[1.0, 0.0], -3.0);
    assert_eq!(confidence_profile(&steep, &pts, 0.5 + 1e-9).unwrap(), 1.0);
    assert!(confidence_profile(&steep, &pts, 0.5).is_err());
    assert!(confidence_profile(&steep, &pts, 1.0).is_err());
}

#[test]
fn confidence_grows_with_scale() {
    let pts = grid_2d(&square(), 40);
    let soft = confidence_profile(&linear(&[0.5, 0.5], -3.0), &pts, 0.9).unwrap();
    let sharp = confidence_profile(&linear(&[5.0, 5.0], -30.0), &pts, 0.9).unwrap();
    assert!(sharp > soft);
}

fn cf(origin: Vec<f64>, explanation: Vec<f64>, converged: bool) -> CfResult {
    CfResult {
        origin,
        explanation,
        origin_label: 0,
        cf_label: 1,
        achieved_prob: 0.6,
        distance: 0.0,
        steps_used: 1,
        converged,
    }
}

#[test]
fn leakage_rank_orders_by_mean_change() {
    let rs = vec![
        cf(vec![0.0, 0.0], vec![2.0, 0.5], true),
        cf(vec![1.0, 1.0], vec![2.0, 1.5], true),
        cf(vec![0.0, 0.0], vec![0.0, 100.0], false),
    ];
    let r = feature_leakage_rank(&rs, &Normalizer::identity(2)).unwrap();
    assert_eq!(r.order, vec![0, 1]);
    assert_eq!(r.mean_abs_change, vec![1.5, 0.5]);
    assert!(!r.tied);
}

#[test]
fn leakage_rank_with_a_dominant_weight() {
    // closest CF under L2 moves along the weight vector
    let cloud = linear(&[2.0, 0.5], -6.0);
    let oracle = crate::oracle::CfOracle::new(cloud, CfConfig::default()).unwrap();
    let results: Vec<CfResult> = [[0.5, 0.5], [1.0, 2.0], [2.0, 1.0]]
        .iter()
        .map(|x| oracle.explain(x).unwrap())
        .collect();
    let r = feature_leakage_rank(&results, &Normalizer::identity(2)).unwrap();
    assert_eq!(r.order, vec![0, 1]);
}

#[test]
fn leakage_rank_flags_ties_and_ignores_duplication() {
    let rs = vec![
        cf(vec![0.0, 0.0], vec![1.0, 1.0], true),
        cf(vec![3.0, 3.0], vec![2.0, 2.0], true),
    ];
    let r = feature_leakage_rank(&rs, &Normalizer::identity(2)).unwrap();
    assert!(r.tied);
    assert_eq!(r.order, vec![0, 1]);

    let base = vec![
        cf(vec![0.0, 0.0], vec![0.2, 1.0], true),
        cf(vec![0.0, 0.0], vec![0.4, 3.0], true),
    ];
    let doubled: Vec<CfResult> = base.iter().chain(&base).cloned().collect();
    let a = feature_leakage_rank(&base, &Normalizer::identity(2)).unwrap();
    let b = feature_leakage_rank(&doubled, &Normalizer::identity(2)).unwrap();
    assert_eq!(a.order, b.order);
    assert_eq!(a.order, vec![1, 0]);
    assert!(feature_leakage_rank(&[cf(vec![0.0], vec![1.0], false)], &Normalizer::identity(1)).is_err());
}

fn tiny_setup() -> CloudSetup {
    let ds = gen_syn_linear(400, 5).unwrap();
    let cfg = TrainConfig {
        epochs: 30,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    CloudSetup::train("syn_linear", &ds, 1, &[6], &cfg, &[]).unwrap().0
}

fn tiny_sweep() -> SweepConfig {
    let mut s = SweepConfig::new(
        vec![4],
        TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        },
    );
    s.strategies = vec![Strategy::StealMl, Strategy::DualCf];
    s.query_sizes = vec![1, 2, 4];
    s.runs_per_size = 5;
    s.cf.max_steps = 200;
    s
}

#[test]
fn sweep_produces_one_record_per_cell_in_order() {
    let setup = tiny_setup();
    let t = run_sweep(&setup, &tiny_sweep()).unwrap();
    assert_eq!(t.records.len(), 2 * 3 * 5);
    assert_eq!(t.records[0].strategy, Strategy::StealMl);
    assert_eq!(t.records[5].query_size, 2);
    assert_eq!(t.records[15].strategy, Strategy::DualCf);
    for r in &t.records {
        assert!((0.0..=1.0).contains(&r.agreement));
        let per_query = if r.strategy == Strategy::StealMl { 1 } else { 2 };
        assert_eq!(r.api_calls, (per_query * r.query_size) as u64);
    }
    let agg = t.aggregates();
    assert_eq!(agg.len(), 6);
    let a = t.aggregate(Strategy::DualCf, 4).unwrap();
    let xs = t.agreements(Strategy::DualCf, 4);
    assert_eq!(xs.len(), 5);
    assert_eq!(a.mean_agreement, mean(&xs));
    assert_eq!(a.std_agreement, population_std(&xs));
    assert_eq!(a.mean_api_calls, 8.0);
}

#[test]
fn sweep_is_deterministic_and_parallel_safe() {
    let setup = tiny_setup();
    let mut cfg = tiny_sweep();
    let a = run_sweep(&setup, &cfg).unwrap();
    cfg.jobs = 3;
    let b = run_sweep(&setup, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn strategy_subset_does_not_change_cells() {
    let setup = tiny_setup();
    let mut cfg = tiny_sweep();
    let both = run_sweep(&setup, &cfg).unwrap();
    cfg.strategies = vec![Strategy::DualCf];
    let only = run_sweep(&setup, &cfg).unwrap();
    assert_eq!(only.records[..], both.records[15..]);
}

#[test]
fn sweep_rejects_oversized_queries_and_bad_config() {
    let setup = tiny_setup();
    let mut cfg = tiny_sweep();
    cfg.query_sizes = vec![1, 10_000];
    assert!(matches!(run_sweep(&setup, &cfg), Err(Error::Config(_))));
    cfg.query_sizes = vec![4, 2];
    assert!(run_sweep(&setup, &cfg).is_err());
    cfg.query_sizes = vec![1];
    cfg.runs_per_size = 0;
    assert!(run_sweep(&setup, &cfg).is_err());
}

#[test]
fn record_and_aggregate_csv_round_trip() {
    let setup = tiny_setup();
    let mut cfg = tiny_sweep();
    cfg.runs_per_size = 2;
    let t = run_sweep(&setup, &cfg).unwrap();
    let mut buf = Vec::new();
    write_records_csv(&t, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("dataset,strategy,query_size,run_seed,agreement,api_calls,dropped_pairs\n"));
    assert_eq!(read_records_csv(&buf[..]).unwrap(), t);

    let mut abuf = Vec::new();
    write_aggregates_csv(&t.aggregates(), &mut abuf).unwrap();
    assert!(abuf.starts_with(b"dataset,strategy,query_size,mean_agreement,std_agreement,mean_api_calls\n"));
    assert_eq!(read_aggregates_csv(&abuf[..]).unwrap(), t.aggregates());
    assert!(read_records_csv(&b"a,b\n1,2\n"[..]).is_err());
}

#[test]
fn cell_training_set_matches_the_sweep() {
    let setup = tiny_setup();
    let cfg = tiny_sweep();
    let t = run_sweep(&setup, &cfg).unwrap();
    let (set, budget) = cell_training_set(&setup, &cfg, Strategy::DualCf, 4, 2).unwrap();
    let rec = t
        .records
        .iter()
        .filter(|r| r.strategy == Strategy::DualCf && r.query_size == 4)
        .nth(2)
        .unwrap();
    assert_eq!(budget.api_calls, rec.api_calls);
    assert_eq!(set.dropped, rec.dropped_pairs);
    assert_eq!(set.len(), 2 * (4 - set.dropped));
    assert!(cell_training_set(&setup, &cfg, Strategy::DualCf, 3, 0).is_err());
}

#[test]
fn run_cell_reproduces_each_record() {
    let setup = tiny_setup();
    let cfg = tiny_sweep();
    let t = run_sweep(&setup, &cfg).unwrap();
    for rec in t.records.iter().filter(|r| r.query_size == 4) {
        let run = t
            .records
            .iter()
            .filter(|r| r.strategy == rec.strategy && r.query_size == 4)
            .position(|r| r == rec)
            .unwrap();
        let out = run_cell(&setup, &cfg, rec.strategy, 4, run).unwrap();
        assert_eq!(&out.record, rec);
        assert_eq!(out.queries.len(), 4);
        let again = agreement(&setup.cloud, &out.substitute, &setup.eval_points()).unwrap();
        assert_eq!(again, rec.agreement);
    }
    assert!(run_cell(&setup, &cfg, Strategy::StealMl, 4, cfg.runs_per_size).is_err());
}
