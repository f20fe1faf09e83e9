use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use detfuse::dataio::load_annotations;
use detfuse::robustbench::{run_sweep, DetectorSource, JitterModel, NoiseSweep};

use crate::util::{load_config, write_atomic};

#[derive(Args)]
pub struct RobustbenchArgs {
    #[arg(long)]
    pub gt: PathBuf,
    /// `recorded:<dir>` (one <condition>.json per condition) or
    /// `simulated:<params.json>`
    #[arg(long)]
    pub source: String,
    /// Sweep config; defaults to the paper sweep (then --seed is required)
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    /// Overrides the sweep file's seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Row label in the report
    #[arg(long)]
    pub label: Option<String>,
    /// Report file; format chosen by extension (.md or .csv)
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: RobustbenchArgs) -> Result<()> {
    let (manifest, gts) = load_annotations(&args.gt)?;

    let mut sweep = match &args.sweep {
        Some(path) => load_config::<NoiseSweep>(path)?,
        None => {
            let seed = args
                .seed
                .context("--seed is required when no --sweep file is given")?;
            NoiseSweep::paper_default(seed)
        }
    };
    if let Some(seed) = args.seed {
        sweep.seed = seed;
    }
    sweep = sweep.normalized();

    let (source, default_label) = match args.source.split_once(':') {
        Some(("recorded", dir)) => {
            let dir = PathBuf::from(dir);
            let mut files = BTreeMap::new();
            for c in &sweep.conditions {
                let p = dir.join(format!("{}.json", c.name));
                if p.is_file() {
                    files.insert(c.name.clone(), p);
                }
            }
            (DetectorSource::Recorded(files), "recorded")
        }
        Some(("simulated", params)) => {
            let model: JitterModel = load_config(&PathBuf::from(params))?;
            model.validate()?;
            (DetectorSource::Simulated(model), "simulated")
        }
        _ => bail!(
            "bad --source {:?}; expected recorded:<dir> or simulated:<params.json>",
            args.source
        ),
    };
    let label = args.label.as_deref().unwrap_or(default_label);

    let report = run_sweep(&manifest, &gts, label, &source, &sweep)?;
    let ext = args
        .out
        .extension()
        .map(|e| e.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    let text = match ext.as_str() {
        "md" => report.to_markdown(),
        "csv" => report.to_csv(),
        other => bail!("unsupported report extension {other:?}; use .md or .csv"),
    };
    write_atomic(&args.out, text.as_bytes())?;
    println!("robustness report -> {}", args.out.display());
    Ok(())
}
