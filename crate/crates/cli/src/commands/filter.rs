use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use detfuse::dataio::{load_predictions, predictions_to_json, PredictionsFile};
use detfuse::postprocess::{filter_area, filter_confidence, AreaRule, ClassThresholds};
use serde::Deserialize;

use crate::util::{load_config, write_atomic};

#[derive(Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub pred: PathBuf,
    /// Per-class confidence thresholds: {"default": 0.5, "per_class": {"0": 0.3}}
    #[arg(long = "class-thr")]
    pub class_thr: Option<PathBuf>,
    /// Area-consistency rules: {"rules": [{"scale_min": 1.5, "max_area_fraction": 0.5}]}
    #[arg(long = "area-rules")]
    pub area_rules: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Deserialize)]
struct RulesFile {
    rules: Vec<AreaRule>,
}

pub fn run(args: FilterArgs) -> Result<()> {
    let file = load_predictions(&args.pred)?;
    let thresholds: Option<ClassThresholds> = match &args.class_thr {
        Some(p) => {
            let t: ClassThresholds = load_config(p)?;
            t.validate()?;
            Some(t)
        }
        None => None,
    };
    let rules: Vec<AreaRule> = match &args.area_rules {
        Some(p) => load_config::<RulesFile>(p)?.rules,
        None => Vec::new(),
    };

    let mut kept = 0usize;
    let mut total = 0usize;
    let mut sets = std::collections::BTreeMap::new();
    for (id, set) in &file.sets {
        total += set.boxes.len();
        let mut filtered = match &thresholds {
            Some(t) => filter_confidence(set, t),
            None => set.clone(),
        };
        let outcome = filter_area(&filtered, &rules)?;
        if let Some(warning) = outcome.warning {
            eprintln!("warning: {warning}");
        }
        filtered = outcome.set;
        kept += filtered.boxes.len();
        sets.insert(id.clone(), filtered);
    }

    let out_file = PredictionsFile {
        source_id: file.source_id.clone(),
        classes: file.classes.clone(),
        sets,
    };
    write_atomic(&args.out, predictions_to_json(&out_file)?.as_bytes())?;
    println!(
        "filter: kept {kept}/{total} boxes -> {}",
        args.out.display()
    );
    Ok(())
}
