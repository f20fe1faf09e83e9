//! `detfuse` — detection-pipeline toolkit CLI.
//!
//! Subcommands mirror the pipeline stages: split, augment, filter, fuse,
//! eval, robustbench, and `pipeline` which chains them from one config.
//! Every output is written atomically; every stochastic stage takes an
//! explicit seed, so published artifacts replay exactly.

mod commands;
mod util;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "detfuse",
    version = concat!(env!("CARGO_PKG_VERSION"), " (schema detfuse/1)"),
    about = "Augmentation, fusion, post-processing and evaluation for detection pipelines"
)]
struct Cli {
    /// Worker threads for per-image stages (default: available parallelism).
    /// Results are identical regardless of this setting.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stratified train/validation split of an annotation file
    Split(commands::split::SplitArgs),
    /// Apply an augmentation pipeline to a directory of images
    Augment(commands::augment::AugmentArgs),
    /// Confidence and area filtering of a prediction file
    Filter(commands::filter::FilterArgs),
    /// Fuse prediction files with WBF (or the NMS baseline)
    Fuse(commands::fuse::FuseArgs),
    /// COCO-style evaluation of predictions against ground truth
    Eval(commands::eval::EvalArgs),
    /// Robustness sweep over noise conditions
    Robustbench(commands::robustbench::RobustbenchArgs),
    /// Run split -> augment -> filter -> fuse -> eval from one config
    Pipeline(commands::pipeline::PipelineArgs),
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    let result = match cli.command {
        Command::Split(args) => commands::split::run(args),
        Command::Augment(args) => commands::augment::run(args),
        Command::Filter(args) => commands::filter::run(args),
        Command::Fuse(args) => commands::fuse::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Robustbench(args) => commands::robustbench::run(args),
        Command::Pipeline(args) => commands::pipeline::run(args),
    };
    if let Err(e) = result {
        let payload = serde_json::json!({"error": {"message": format!("{e:#}")}});
        eprintln!("{payload}");
        std::process::exit(1);
    }
}
