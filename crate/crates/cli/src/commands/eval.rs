use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use detfuse::dataio::{load_annotations, load_predictions_with};
use detfuse::eval::{
    evaluate, render_csv, render_json, render_markdown, render_table, EvalConfig, MiouMode,
};
use detfuse::postprocess::ClassThresholds;

use crate::util::{parse_iou_thresholds, write_atomic};

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// IoU thresholds: a value, a comma list, or start:stop:step
    #[arg(long = "iou-thrs", default_value = "0.5:0.95:0.05")]
    pub iou_thrs: String,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub report: ReportFormat,
    /// Operating confidence threshold for the P/R columns
    #[arg(long = "op-thr", default_value_t = 0.5)]
    pub op_thr: f64,
    #[arg(long = "miou-mode", value_enum, default_value_t = MiouArg::TpAtHalf)]
    pub miou_mode: MiouArg,
    /// Cap detections per image (highest confidence first)
    #[arg(long = "max-dets")]
    pub max_dets: Option<usize>,
    /// Write here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
    Csv,
    Md,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MiouArg {
    TpAtHalf,
    BestMatch,
}

pub fn run(args: EvalArgs) -> Result<()> {
    let (manifest, gts) = load_annotations(&args.gt)?;
    let preds = load_predictions_with(&args.pred, &manifest.classes)?;
    let cfg = EvalConfig {
        iou_thresholds: parse_iou_thresholds(&args.iou_thrs)?,
        operating: ClassThresholds::uniform(args.op_thr),
        miou_mode: match args.miou_mode {
            MiouArg::TpAtHalf => MiouMode::TpAtHalf,
            MiouArg::BestMatch => MiouMode::BestMatch,
        },
        max_dets: args.max_dets,
    };
    let report = evaluate(&preds.sets, &gts, &cfg)?;
    let text = match args.report {
        ReportFormat::Table => render_table(&report),
        ReportFormat::Json => render_json(&report),
        ReportFormat::Csv => render_csv(&report),
        ReportFormat::Md => render_markdown(&report),
    };
    match &args.out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}
