use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use tempfile::TempDir;

const SMALL: &str = r#"
[dataset]
kind = "syn_linear"
n_samples = 400

[cloud]
hidden = [10]
checkpoints = [25, 50, 75, 100]

[cloud.train]
epochs = 100
seed = 1

[attack]
strategies = ["steal_ml", "steal_ml_coreset", "model_extraction", "dual_cf"]
hidden = [10]

[attack.train]
epochs = 50

[sweep]
query_sizes = [1, 2, 4]
runs_per_size = 2
"#;

fn cfx(args: &[&str]) -> Output {
    cfx_env(args, None)
}

fn cfx_env(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cfx"));
    cmd.args(args).env_remove("CFX_OUT_DIR");
    if let Some(d) = out_env {
        cmd.env("CFX_OUT_DIR", d);
    }
    cmd.output().expect("spawn cfx")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new(config: &str) -> Self {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("exp.toml"), config).unwrap();
        Workspace { dir }
    }

    fn config(&self) -> String {
        self.dir.path().join("exp.toml").to_string_lossy().into_owned()
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn run(&self, args: &[&str]) -> Output {
        let config = self.config();
        let out = self.out();
        let mut all = args.to_vec();
        all.extend(["--config", &config, "--out-dir", out.to_str().unwrap()]);
        cfx(&all)
    }

    fn train(&self) {
        let o = self.run(&["train-cloud"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
}

#[test]
fn unknown_config_key_exits_1_naming_the_key() {
    let ws = Workspace::new(&SMALL.replace("epochs = 100", "epochs = 100\nepoks = 3"));
    let o = ws.run(&["train-cloud"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("cloud.train"), "{e}");
    assert!(e.contains("epoks"), "{e}");
}

#[test]
fn invalid_value_exits_1() {
    let ws = Workspace::new(&SMALL.replace("runs_per_size = 2", "runs_per_size = 0"));
    let o = ws.run(&["sweep"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn missing_config_file_exits_1() {
    let o = cfx(&["train-cloud", "--config", "/nonexistent/exp.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_dataset_file_exits_2_naming_the_path() {
    let text = SMALL.replace(
        "kind = \"syn_linear\"",
        "kind = \"csv\"\npath = \"data/absent.csv\"\nlabel_column = \"y\"",
    );
    let ws = Workspace::new(&text);
    let o = ws.run(&["train-cloud"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.csv"), "{}", stderr(&o));
}

#[test]
fn sweep_without_cloud_model_exits_2() {
    let ws = Workspace::new(SMALL);
    let o = ws.run(&["sweep"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("train-cloud"), "{}", stderr(&o));
}

#[test]
fn unknown_ablation_and_bad_flags_exit_1() {
    let ws = Workspace::new(SMALL);
    assert_eq!(ws.run(&["ablate", "dropout"]).status.code(), Some(1));
    assert_eq!(ws.run(&["sweep", "--cost-axis", "seconds"]).status.code(), Some(1));
    assert_eq!(cfx(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cfx(&["--help"]).status.code(), Some(0));
}

#[test]
fn train_cloud_writes_model_and_checkpoints_reproducibly() {
    let ws = Workspace::new(SMALL);
    ws.train();
    let cloud = ws.out().join("syn_linear").join("cloud");
    let model = fs::read(cloud.join("model.json")).unwrap();
    let mut names: Vec<String> = fs::read_dir(cloud.join("checkpoints"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "epoch_0025.json",
            "epoch_0050.json",
            "epoch_0075.json",
            "epoch_0100.json"
        ]
    );
    // the final checkpoint is the model itself
    assert_eq!(fs::read(cloud.join("checkpoints/epoch_0100.json")).unwrap(), model);

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(cloud.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train-cloud");
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 5);

    ws.train();
    assert_eq!(fs::read(cloud.join("model.json")).unwrap(), model);
}

#[test]
fn seed_flag_changes_the_cloud() {
    let ws = Workspace::new(SMALL);
    ws.train();
    let path = ws.out().join("syn_linear/cloud/model.json");
    let a = fs::read(&path).unwrap();
    let o = ws.run(&["train-cloud", "--seed", "7"]);
    assert!(o.status.success());
    assert_ne!(fs::read(&path).unwrap(), a);
}

#[test]
fn smoke_sweep_is_fast_and_reproducible() {
    let ws = Workspace::new(SMALL);
    ws.train();
    let sweep = ws.out().join("syn_linear/sweep");
    let started = Instant::now();
    let o = ws.run(&["sweep", "--runs", "1", "--sizes", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(started.elapsed().as_secs_f64() < 10.0);
    let records = fs::read(sweep.join("records.csv")).unwrap();
    let aggregates = fs::read_to_string(sweep.join("aggregates.csv")).unwrap();

    // four strategies, one size each
    let rows: Vec<&str> = aggregates.lines().skip(1).collect();
    assert_eq!(rows.len(), 4, "{aggregates}");
    for s in ["steal_ml,", "steal_ml_coreset,", "model_extraction,", "dual_cf,"] {
        assert_eq!(rows.iter().filter(|r| r.contains(&format!(",{s}"))).count(), 1, "{s}");
    }
    let svg = fs::read_to_string(sweep.join("agreement.svg")).unwrap();
    assert_eq!(svg.matches("class=\"series\"").count(), 2 * 4);

    let o = ws.run(&["sweep", "--runs", "1", "--sizes", "2", "--jobs", "2"]);
    assert!(o.status.success());
    assert_eq!(fs::read(sweep.join("records.csv")).unwrap(), records);
    assert_eq!(fs::read_to_string(sweep.join("aggregates.csv")).unwrap(), aggregates);
}

#[test]
fn sweep_flags_override_the_file() {
    let ws = Workspace::new(SMALL);
    ws.train();
    let o = ws.run(&["sweep", "--runs", "3", "--sizes", "1,4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let records = fs::read_to_string(ws.out().join("syn_linear/sweep/records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 4 * 2 * 3);
    let base = records.clone();

    let o = ws.run(&["sweep", "--runs", "3", "--sizes", "1,4", "--seed", "99"]);
    assert!(o.status.success());
    let reseeded = fs::read_to_string(ws.out().join("syn_linear/sweep/records.csv")).unwrap();
    assert_ne!(reseeded, base);
}

#[test]
fn export_sets_writes_items_pairing_and_explanations() {
    let ws = Workspace::new(SMALL);
    ws.train();
    let o = ws.run(&["sweep", "--runs", "1", "--sizes", "2", "--export-sets"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sets = ws.out().join("syn_linear/sweep/sets");
    for stem in [
        "steal_ml_q2",
        "steal_ml_coreset_q2",
        "model_extraction_q2",
        "dual_cf_q2",
    ] {
        assert!(sets.join(format!("{stem}.csv")).exists(), "{stem}");
        assert!(sets.join(format!("{stem}.pairs.csv")).exists(), "{stem}");
    }
    assert!(sets.join("dual_cf_q2.cf.csv").exists());
    assert!(!sets.join("steal_ml_q2.cf.csv").exists());
}

#[test]
fn cfx_out_dir_sets_the_output_root() {
    let ws = Workspace::new(SMALL);
    let root = ws.dir.path().join("from_env");
    let o = cfx_env(&["train-cloud", "--config", &ws.config()], Some(&root));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(root.join("syn_linear/cloud/model.json").exists());

    // an explicit flag still wins
    let flag = ws.dir.path().join("from_flag");
    let o = cfx_env(
        &[
            "train-cloud",
            "--config",
            &ws.config(),
            "--out-dir",
            flag.to_str().unwrap(),
        ],
        Some(&root),
    );
    assert!(o.status.success());
    assert!(flag.join("syn_linear/cloud/model.json").exists());
}

#[test]
fn ablation_writes_one_table_per_variant() {
    let ws = Workspace::new(SMALL);
    ws.train();
    let o = ws.run(&["ablate", "metric", "--runs", "1", "--sizes", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = ws.out().join("syn_linear/ablation/metric");
    for label in ["l1", "l2", "l1_mad"] {
        assert!(dir.join(label).join("records.csv").exists(), "{label}");
    }
    let combined = fs::read_to_string(dir.join("aggregates.csv")).unwrap();
    assert_eq!(combined.lines().count(), 1 + 3 * 4);
    assert!(combined.contains("syn_linear:l1_mad,"));
    assert!(dir.join("agreement.svg").exists());
    assert!(dir.join("manifest.json").exists());

    let o = ws.run(&["ablate", "threshold", "--runs", "1", "--sizes", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let combined = fs::read_to_string(ws.out().join("syn_linear/ablation/threshold/aggregates.csv")).unwrap();
    assert_eq!(combined.lines().count(), 1 + 4);
}

#[test]
fn plot_is_deterministic_and_rejects_empty_input() {
    let ws = Workspace::new(SMALL);
    ws.train();
    assert!(ws.run(&["sweep", "--runs", "2", "--sizes", "1,2"]).status.success());
    let input = ws.out().join("syn_linear/sweep/aggregates.csv");
    let a = ws.dir.path().join("a.svg");
    let b = ws.dir.path().join("b.svg");
    for p in [&a, &b] {
        let o = cfx(&[
            "plot",
            "--input",
            input.to_str().unwrap(),
            "--output",
            p.to_str().unwrap(),
            "--cost-axis",
            "api-calls",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let header = fs::read_to_string(&input).unwrap().lines().next().unwrap().to_owned();
    let empty = ws.dir.path().join("empty.csv");
    fs::write(&empty, format!("{header}\n")).unwrap();
    let c = ws.dir.path().join("c.svg");
    let o = cfx(&[
        "plot",
        "--input",
        empty.to_str().unwrap(),
        "--output",
        c.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!c.exists());

    let garbled = ws.dir.path().join("garbled.csv");
    fs::write(&garbled, "not,a,table\n1,2\n").unwrap();
    let o = cfx(&[
        "plot",
        "--input",
        garbled.to_str().unwrap(),
        "--output",
        c.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!c.exists());
}

#[test]
fn lemma_check_passes_and_writes_trials() {
    let dir = TempDir::new().unwrap();
    let o = cfx(&[
        "lemma-check",
        "--models",
        "6",
        "--points",
        "2000",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("0 below 0.999"), "{out}");
    let trials: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("lemma/trials.json")).unwrap()).unwrap();
    assert_eq!(trials.as_array().unwrap().len(), 6);
}
