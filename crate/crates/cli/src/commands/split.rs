use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use detfuse::dataio::{self, load_annotations, SplitSize, SplitSpec, SCHEMA_VERSION};
use serde::Serialize;

use crate::util::write_atomic;

#[derive(Args)]
pub struct SplitArgs {
    /// Ground-truth annotation file (detfuse/1 or plain COCO JSON)
    #[arg(long)]
    pub ann: PathBuf,
    /// Validation images per class
    #[arg(long, conflicts_with = "ratio")]
    pub per_class: Option<usize>,
    /// Validation fraction per class (e.g. 0.2 for a 4:1 split)
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct SplitFile<'a> {
    schema: &'a str,
    seed: u64,
    train: &'a [String],
    val: &'a [String],
}

pub fn run(args: SplitArgs) -> Result<()> {
    let (manifest, _) = load_annotations(&args.ann)?;
    let size = match (args.per_class, args.ratio) {
        (Some(n), _) => SplitSize::PerClass(n),
        (None, Some(r)) => SplitSize::Ratio(r),
        (None, None) => SplitSize::default(),
    };
    let result = dataio::split(
        &manifest,
        &SplitSpec {
            size,
            seed: args.seed,
        },
    )?;
    let mut text = serde_json::to_string_pretty(&SplitFile {
        schema: SCHEMA_VERSION,
        seed: args.seed,
        train: &result.train,
        val: &result.val,
    })?;
    text.push('\n');
    write_atomic(&args.out, text.as_bytes())?;
    println!(
        "split: {} train / {} val -> {}",
        result.train.len(),
        result.val.len(),
        args.out.display()
    );
    Ok(())
}
