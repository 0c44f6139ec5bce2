use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cfx_core::config::Ablation;
use cfx_core::plot::CostAxis;

#[derive(Debug, Parser)]
#[command(
    name = "cfx",
    version,
    about = "Model-extraction lab for counterfactual-explanation APIs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the cloud model and save it with its epoch checkpoints.
    TrainCloud(RunArgs),
    /// Run every strategy over the configured query sizes.
    Sweep(SweepArgs),
    /// Run one ablation study: capacity, threshold, metric, imbalance or shuffle.
    Ablate(AblateArgs),
    /// Render an aggregates CSV as an SVG chart.
    Plot(PlotArgs),
    /// Recover random linear clouds from a single CF/CCF pair each.
    LemmaCheck(LemmaArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output root. Falls back to CFX_OUT_DIR, then `output.dir`, then `./cfx-out`.
    #[arg(long, env = "CFX_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// Overrides the seed of the stage being run.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Comma-separated query sizes, e.g. `1,2,4,8`.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = Axis::Queries)]
    pub cost_axis: Axis,
    /// Also write run 0's training set and explanations for every cell.
    #[arg(long)]
    pub export_sets: bool,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(value_parser = parse_ablation)]
    pub ablation: Ablation,
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Aggregates CSV written by `sweep` or `ablate`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Axis::Queries)]
    pub cost_axis: Axis,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    #[arg(long, default_value_t = 20)]
    pub models: usize,
    #[arg(long, default_value_t = 10_000)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the trials as JSON here.
    #[arg(long, env = "CFX_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Queries,
    ApiCalls,
}

impl From<Axis> for CostAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Queries => CostAxis::Queries,
            Axis::ApiCalls => CostAxis::ApiCalls,
        }
    }
}

fn parse_ablation(s: &str) -> Result<Ablation, String> {
    s.parse().map_err(|e: cfx_core::Error| e.to_string())
}
