use std::fs::File;
use std::path::Path;

use cfx_core::attacks::write_training_set;
use cfx_core::config::ablation_variants;
use cfx_core::eval::{
    cell_training_set, read_aggregates_csv, run_sweep, write_aggregates_csv, write_records_csv, Aggregate, CloudSetup,
    ResultTable, SweepConfig,
};
use cfx_core::linear::lemma_check as run_lemma_check;
use cfx_core::nn::{load_model, save_model};
use cfx_core::oracle::write_cf_results;
use cfx_core::plot::{render_svg, CostAxis};

use crate::args::{AblateArgs, LemmaArgs, PlotArgs, RunArgs, SweepArgs};
use crate::failure::{Failure, Outcome};
use crate::manifest::RunManifest;
use crate::settings::{self, create_dir, write_file, Loaded};

pub fn train_cloud(args: &RunArgs) -> Outcome {
    let mut loaded = settings::load(args)?;
    if let Some(seed) = args.seed {
        loaded.config.cloud.train.seed = seed;
    }
    let cfg = &loaded.config;
    let mut manifest = RunManifest::new("train-cloud", cfg);
    manifest.start("load");
    let dataset = cfg.dataset.load(&loaded.base_dir)?;
    manifest.start("train");
    let (setup, checkpoints) = CloudSetup::train(
        &cfg.dataset.id(),
        &dataset,
        cfg.dataset.split_seed,
        &cfg.cloud.hidden,
        &cfg.cloud.train,
        &cfg.cloud.checkpoints,
    )?;
    manifest.start("write");
    let dir = loaded.dataset_dir().join("cloud");
    create_dir(&dir.join("checkpoints"))?;
    let model_path = dir.join("model.json");
    save_model(&setup.cloud.model, &model_path)?;
    manifest.artifact("cloud_model", &model_path);
    for (epoch, m) in &checkpoints {
        let p = dir.join("checkpoints").join(format!("epoch_{epoch:04}.json"));
        save_model(m, &p)?;
        manifest.artifact("checkpoint", &p);
    }
    let accuracy = |rows: &cfx_core::data::Dataset| -> Outcome<f64> {
        let mut hit = 0usize;
        for r in rows.rows() {
            hit += usize::from(setup.cloud.predict(&r.features)? == r.label);
        }
        Ok(hit as f64 / rows.len() as f64)
    };
    println!(
        "{}: cloud trained, train accuracy {:.4}, eval accuracy {:.4}, {} checkpoints",
        setup.dataset_id,
        accuracy(&setup.split.train)?,
        accuracy(&setup.split.eval)?,
        checkpoints.len()
    );
    println!("wrote {}", model_path.display());
    manifest.write(&dir.join("manifest.json"))
}

fn apply_overrides(loaded: &mut Loaded, args: &SweepArgs) -> Outcome {
    let s = &mut loaded.config.sweep;
    if let Some(j) = args.jobs {
        s.jobs = j;
    }
    if let Some(r) = args.runs {
        s.runs_per_size = r;
    }
    if let Some(sizes) = &args.sizes {
        s.query_sizes = sizes.clone();
    }
    if let Some(seed) = args.run.seed {
        s.base_seed = seed;
    }
    loaded.config.validate()?;
    Ok(())
}

fn cloud_setup(loaded: &Loaded) -> Outcome<CloudSetup> {
    let cfg = &loaded.config;
    let dataset = cfg.dataset.load(&loaded.base_dir)?;
    let path = loaded.cloud_model_path();
    if !path.exists() {
        return Err(Failure::runtime(format!(
            "cloud model not found at {}; run train-cloud first or set cloud.model_path",
            path.display()
        )));
    }
    let model = load_model(&path)?;
    Ok(CloudSetup::with_model(
        &cfg.dataset.id(),
        &dataset,
        cfg.dataset.split_seed,
        model,
    )?)
}

fn write_tables(dir: &Path, table: &ResultTable, aggregates: &[Aggregate], manifest: &mut RunManifest) -> Outcome {
    create_dir(dir)?;
    let records = dir.join("records.csv");
    let aggs = dir.join("aggregates.csv");
    let open = |p: &Path| File::create(p).map_err(|e| Failure::runtime(format!("{}: {e}", p.display())));
    write_records_csv(table, open(&records)?)?;
    write_aggregates_csv(aggregates, open(&aggs)?)?;
    manifest.artifact("records", &records);
    manifest.artifact("aggregates", &aggs);
    Ok(())
}

fn write_chart(dir: &Path, aggregates: &[Aggregate], axis: CostAxis, manifest: &mut RunManifest) -> Outcome {
    let svg = render_svg(aggregates, axis)?;
    let path = dir.join("agreement.svg");
    write_file(&path, svg.as_bytes())?;
    manifest.artifact("chart", &path);
    Ok(())
}

fn print_aggregates(aggregates: &[Aggregate]) {
    println!(
        "{:<24} {:<18} {:>6} {:>8} {:>8} {:>9}",
        "dataset", "strategy", "size", "mean", "std", "api_calls"
    );
    for a in aggregates {
        println!(
            "{:<24} {:<18} {:>6} {:>8.4} {:>8.4} {:>9.1}",
            a.dataset, a.strategy, a.query_size, a.mean_agreement, a.std_agreement, a.mean_api_calls
        );
    }
}

fn export_sets(dir: &Path, setup: &CloudSetup, cfg: &SweepConfig, manifest: &mut RunManifest) -> Outcome {
    let dir = dir.join("sets");
    create_dir(&dir)?;
    let names: Vec<String> = setup.split.train.feature_names().to_vec();
    let open = |p: &Path| File::create(p).map_err(|e| Failure::runtime(format!("{}: {e}", p.display())));
    for &strategy in &cfg.strategies {
        for &q in &cfg.query_sizes {
            let (set, _) = cell_training_set(setup, cfg, strategy, q, 0)?;
            let stem = format!("{}_q{q}", strategy.name());
            let items = dir.join(format!("{stem}.csv"));
            let pairs = dir.join(format!("{stem}.pairs.csv"));
            write_training_set(&set, open(&items)?, open(&pairs)?)?;
            manifest.artifact("training_set", &items);
            manifest.artifact("pairing", &pairs);
            if !set.explanations.is_empty() {
                let cf = dir.join(format!("{stem}.cf.csv"));
                write_cf_results(&set.explanations, &names, open(&cf)?)?;
                manifest.artifact("explanations", &cf);
            }
        }
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> Outcome {
    let mut loaded = settings::load(&args.run)?;
    apply_overrides(&mut loaded, args)?;
    let mut manifest = RunManifest::new("sweep", &loaded.config);
    manifest.start("load");
    let setup = cloud_setup(&loaded)?;
    manifest.artifact("cloud_model", &loaded.cloud_model_path());
    let cfg = loaded.config.sweep_config();
    manifest.start("sweep");
    let table = run_sweep(&setup, &cfg)?;
    manifest.start("write");
    let dir = loaded.dataset_dir().join("sweep");
    let aggregates = table.aggregates();
    write_tables(&dir, &table, &aggregates, &mut manifest)?;
    write_chart(&dir, &aggregates, args.cost_axis.into(), &mut manifest)?;
    if args.export_sets {
        export_sets(&dir, &setup, &cfg, &mut manifest)?;
    }
    print_aggregates(&aggregates);
    println!("wrote {}", dir.display());
    manifest.write(&dir.join("manifest.json"))
}

pub fn ablate(args: &AblateArgs) -> Outcome {
    let mut loaded = settings::load(&args.sweep.run)?;
    apply_overrides(&mut loaded, &args.sweep)?;
    let mut manifest = RunManifest::new(&format!("ablate {}", args.ablation), &loaded.config);
    manifest.start("load");
    let setup = cloud_setup(&loaded)?;
    manifest.artifact("cloud_model", &loaded.cloud_model_path());
    let dir = loaded.dataset_dir().join("ablation").join(args.ablation.name());
    let mut combined = Vec::new();
    for variant in ablation_variants(&loaded.config, args.ablation) {
        manifest.start(&variant.label);
        let table = run_sweep(&setup, &variant.sweep)?;
        let aggregates = table.aggregates();
        write_tables(&dir.join(&variant.label), &table, &aggregates, &mut manifest)?;
        combined.extend(aggregates.into_iter().map(|a| Aggregate {
            dataset: format!("{}:{}", a.dataset, variant.label),
            ..a
        }));
    }
    manifest.start("write");
    let all = dir.join("aggregates.csv");
    let file = File::create(&all).map_err(|e| Failure::runtime(format!("{}: {e}", all.display())))?;
    write_aggregates_csv(&combined, file)?;
    manifest.artifact("aggregates", &all);
    write_chart(&dir, &combined, args.sweep.cost_axis.into(), &mut manifest)?;
    print_aggregates(&combined);
    println!("wrote {}", dir.display());
    manifest.write(&dir.join("manifest.json"))
}

pub fn plot(args: &PlotArgs) -> Outcome {
    let file = File::open(&args.input).map_err(|e| Failure::runtime(format!("{}: {e}", args.input.display())))?;
    let aggregates =
        read_aggregates_csv(file).map_err(|e| Failure::runtime(format!("{}: {e}", args.input.display())))?;
    let svg = render_svg(&aggregates, args.cost_axis.into())?;
    write_file(&args.output, svg.as_bytes())?;
    println!("wrote {}", args.output.display());
    Ok(())
}

pub fn lemma_check(args: &LemmaArgs) -> Outcome {
    let trials = run_lemma_check(args.models, &[2, 5, 10], args.points, args.seed)?;
    let mut failed = 0;
    for (i, t) in trials.iter().enumerate() {
        match t.agreement {
            Some(a) => {
                let ok = a >= 0.999;
                failed += usize::from(!ok);
                println!(
                    "model {i:>3} d={:<3} agreement {a:.5} {}",
                    t.dim,
                    if ok { "ok" } else { "LOW" }
                );
            }
            None => {
                failed += 1;
                println!("model {i:>3} d={:<3} explanation did not converge", t.dim);
            }
        }
    }
    let worst = trials.iter().filter_map(|t| t.agreement).fold(1.0f64, f64::min);
    println!(
        "{} models, {failed} below 0.999, minimum agreement {worst:.5}",
        trials.len()
    );
    if let Some(dir) = &args.out_dir {
        let json = serde_json::to_string_pretty(&trials).map_err(|e| Failure::runtime(e.to_string()))?;
        write_file(&dir.join("lemma").join("trials.json"), format!("{json}\n").as_bytes())?;
    }
    if failed > 0 {
        return Err(Failure::runtime(format!("lemma check failed on {failed} models")));
    }
    Ok(())
}
