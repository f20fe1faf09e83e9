use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use detfuse::augment::{AugmentPipeline, AugmentSpec, Raster};
use detfuse::dataio::{list_images, load_raster, save_raster, SCHEMA_VERSION};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::util::{load_config, write_atomic};

#[derive(Args)]
pub struct AugmentArgs {
    /// Pipeline config: {"schema": "detfuse/1", "pipeline": [ops...]}
    #[arg(long)]
    pub config: PathBuf,
    /// Directory of input images (PNG or JPEG)
    #[arg(long)]
    pub images: PathBuf,
    /// Output directory; augmented copies are written as PNG
    #[arg(long)]
    pub out: PathBuf,
    /// Base seed for stochastic ops without their own seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Deserialize)]
pub struct AugmentConfig {
    pub pipeline: Vec<AugmentSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct AugManifest {
    schema: &'static str,
    images: Vec<AugImage>,
}

#[derive(Serialize)]
struct AugImage {
    file: String,
    width: u32,
    height: u32,
    sha256_rgb8: String,
}

pub fn hash_raster(img: &Raster) -> String {
    let digest = Sha256::digest(img.as_raw());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Augment every image in a directory; returns one manifest row per image.
pub fn augment_dir(
    pipeline: &AugmentPipeline,
    images: &Path,
    out: &Path,
) -> Result<Vec<(String, Raster)>> {
    let files = list_images(images)?;
    std::fs::create_dir_all(out)?;
    files
        .par_iter()
        .map(|path| {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let img = load_raster(path).with_context(|| format!("loading {}", path.display()))?;
            let (aug, _) = pipeline.apply_tagged(&img, &[], &stem)?;
            let out_name = format!("{stem}.png");
            save_raster(&aug, out.join(&out_name))?;
            Ok((out_name, aug))
        })
        .collect()
}

pub fn manifest_json(rows: &[(String, Raster)]) -> Result<String> {
    let manifest = AugManifest {
        schema: SCHEMA_VERSION,
        images: rows
            .iter()
            .map(|(file, img)| AugImage {
                file: file.clone(),
                width: img.width(),
                height: img.height(),
                sha256_rgb8: hash_raster(img),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    Ok(text)
}

pub fn run(args: AugmentArgs) -> Result<()> {
    let cfg: AugmentConfig = load_config(&args.config)?;
    let mut pipeline = AugmentPipeline::new(cfg.pipeline)?;
    if let Some(seed) = args.seed.or(cfg.seed) {
        pipeline = pipeline.with_base_seed(seed);
    }
    let rows = augment_dir(&pipeline, &args.images, &args.out)?;
    write_atomic(
        &args.out.join("aug_manifest.json"),
        manifest_json(&rows)?.as_bytes(),
    )?;
    println!("augmented {} images -> {}", rows.len(), args.out.display());
    Ok(())
}
