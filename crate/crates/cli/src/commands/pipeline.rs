use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use detfuse::augment::{AugmentPipeline, AugmentSpec};
use detfuse::dataio::{
    list_images, load_annotations, load_predictions_with, load_raster, predictions_to_json,
    save_raster, PredictionsFile, SplitSize, SplitSpec, SCHEMA_VERSION,
};
use detfuse::eval::{evaluate, render_markdown, EvalConfig, MiouMode};
use detfuse::fusion::FusionConfig;
use detfuse::postprocess::{filter_area, filter_confidence, AreaRule, ClassThresholds};
use rayon::prelude::*;
use serde::Deserialize;

use super::augment::{hash_raster, manifest_json};
use super::fuse::{fuse_sources, Method};
use crate::util::{parse_iou_thresholds, write_atomic};

#[derive(Args)]
pub struct PipelineArgs {
    /// Pipeline config (see docs/formats.md); paths inside are resolved
    /// relative to the config file
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for all artifacts
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Deserialize)]
struct PipelineConfig {
    seed: u64,
    annotations: PathBuf,
    #[serde(default)]
    images_dir: Option<PathBuf>,
    #[serde(default)]
    split: Option<SplitSize>,
    #[serde(default)]
    augment: Option<Vec<AugmentSpec>>,
    predictions: Vec<PathBuf>,
    #[serde(default)]
    class_thresholds: Option<ClassThresholds>,
    #[serde(default)]
    area_rules: Option<Vec<AreaRule>>,
    #[serde(default)]
    fusion: Option<FusionConfig>,
    #[serde(default)]
    eval: Option<EvalSection>,
}

#[derive(Deserialize)]
struct EvalSection {
    #[serde(default)]
    iou_thrs: Option<String>,
    #[serde(default)]
    operating_threshold: Option<f64>,
    #[serde(default)]
    miou_mode: Option<MiouMode>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn run(args: PipelineArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if let Some(s) = value.get("schema").and_then(|v| v.as_str()) {
        if !s.starts_with("detfuse/") {
            bail!("unsupported schema {s:?}");
        }
    }
    let cfg: PipelineConfig = serde_json::from_value(value)
        .with_context(|| format!("parsing {}", args.config.display()))?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();

    // validate referenced paths before doing any work
    let ann_path = resolve(&base, &cfg.annotations);
    if !ann_path.is_file() {
        bail!("annotations not found: {}", ann_path.display());
    }
    let pred_paths: Vec<PathBuf> = cfg
        .predictions
        .iter()
        .map(|p| resolve(&base, p))
        .collect();
    for p in &pred_paths {
        if !p.is_file() {
            bail!("prediction file not found: {}", p.display());
        }
    }
    let images_dir = cfg.images_dir.as_ref().map(|d| resolve(&base, d));
    if cfg.augment.is_some() {
        let Some(dir) = &images_dir else {
            bail!("augment stage configured but images_dir is missing");
        };
        if !dir.is_dir() {
            bail!("images_dir not found: {}", dir.display());
        }
    }

    std::fs::create_dir_all(&args.out)?;
    let (manifest, gts) = load_annotations(&ann_path)?;

    // stage 1: split
    let val_ids: Vec<String> = match cfg.split {
        Some(size) => {
            let result = detfuse::dataio::split(
                &manifest,
                &SplitSpec {
                    size,
                    seed: cfg.seed,
                },
            )?;
            let payload = serde_json::json!({
                "schema": SCHEMA_VERSION,
                "seed": cfg.seed,
                "train": result.train,
                "val": result.val,
            });
            let mut text = serde_json::to_string_pretty(&payload)?;
            text.push('\n');
            write_atomic(&args.out.join("split.json"), text.as_bytes())?;
            println!("[1/5] split: {} val images", result.val.len());
            result.val
        }
        None => {
            println!("[1/5] split: skipped (all images used)");
            manifest.entries.iter().map(|e| e.image_id.clone()).collect()
        }
    };

    // stage 2: augment the validation images
    match (&cfg.augment, &images_dir) {
        (Some(specs), Some(dir)) => {
            if specs.iter().any(|s| s.kind.is_geometric()) {
                bail!(
                    "pipeline augmentation must be photometric; geometric ops would \
                     desynchronize recorded predictions from the image geometry"
                );
            }
            let pipeline = AugmentPipeline::new(specs.clone())?.with_base_seed(cfg.seed);
            let aug_dir = args.out.join("augmented");
            std::fs::create_dir_all(&aug_dir)?;
            let mut by_stem: BTreeMap<String, PathBuf> = BTreeMap::new();
            for p in list_images(dir)? {
                if let Some(stem) = p.file_stem() {
                    by_stem.insert(stem.to_string_lossy().into_owned(), p);
                }
            }
            let rows: Vec<(String, detfuse::augment::Raster)> = val_ids
                .par_iter()
                .map(|id| {
                    let entry = manifest
                        .entry(id)
                        .with_context(|| format!("image {id} missing from manifest"))?;
                    let path = entry
                        .file_name
                        .as_ref()
                        .map(|n| dir.join(n))
                        .filter(|p| p.is_file())
                        .or_else(|| by_stem.get(id).cloned())
                        .with_context(|| format!("no image file for {id}"))?;
                    let img = load_raster(&path)?;
                    let (aug, _) = pipeline.apply_tagged(&img, &[], id)?;
                    let out_name = format!("{id}.png");
                    save_raster(&aug, aug_dir.join(&out_name))?;
                    let _ = hash_raster(&aug);
                    Ok((out_name, aug))
                })
                .collect::<Result<_>>()?;
            write_atomic(
                &args.out.join("aug_manifest.json"),
                manifest_json(&rows)?.as_bytes(),
            )?;
            println!("[2/5] augment: {} images", rows.len());
        }
        _ => println!("[2/5] augment: skipped"),
    }

    // stage 3: load + filter predictions, restricted to the validation ids
    let thresholds = cfg.class_thresholds.clone();
    if let Some(t) = &thresholds {
        t.validate()?;
    }
    let rules = cfg.area_rules.clone().unwrap_or_default();
    let mut sources: Vec<PredictionsFile> = Vec::new();
    let mut kept = 0usize;
    let mut total = 0usize;
    for path in &pred_paths {
        let file = load_predictions_with(path, &manifest.classes)?;
        let mut sets = BTreeMap::new();
        for (id, set) in &file.sets {
            if !val_ids.contains(id) {
                continue;
            }
            total += set.boxes.len();
            let mut filtered = match &thresholds {
                Some(t) => filter_confidence(set, t),
                None => set.clone(),
            };
            let outcome = filter_area(&filtered, &rules)?;
            if let Some(w) = outcome.warning {
                eprintln!("warning: {w}");
            }
            filtered = outcome.set;
            kept += filtered.boxes.len();
            sets.insert(id.clone(), filtered);
        }
        sources.push(PredictionsFile {
            source_id: file.source_id,
            classes: file.classes,
            sets,
        });
    }
    println!("[3/5] filter: kept {kept}/{total} boxes across {} sources", sources.len());

    // stage 4: fuse
    let fusion_cfg = cfg.fusion.clone().unwrap_or_default();
    fusion_cfg.validate()?;
    let fused_sets = fuse_sources(&sources, &fusion_cfg, Method::Wbf)?;
    let fused_boxes: usize = fused_sets.values().map(|s| s.boxes.len()).sum();
    let fused = PredictionsFile {
        source_id: "wbf".into(),
        classes: manifest.classes.clone(),
        sets: fused_sets,
    };
    write_atomic(
        &args.out.join("fused.json"),
        predictions_to_json(&fused)?.as_bytes(),
    )?;
    println!("[4/5] fuse: {fused_boxes} boxes");

    // stage 5: evaluate against the validation ground truth
    let gts_val: BTreeMap<String, _> = gts
        .into_iter()
        .filter(|(id, _)| val_ids.contains(id))
        .collect();
    let eval_cfg = EvalConfig {
        iou_thresholds: match cfg.eval.as_ref().and_then(|e| e.iou_thrs.as_deref()) {
            Some(spec) => parse_iou_thresholds(spec)?,
            None => detfuse::eval::coco_thresholds(),
        },
        operating: ClassThresholds::uniform(
            cfg.eval
                .as_ref()
                .and_then(|e| e.operating_threshold)
                .unwrap_or(0.5),
        ),
        miou_mode: cfg
            .eval
            .as_ref()
            .and_then(|e| e.miou_mode)
            .unwrap_or(MiouMode::TpAtHalf),
        max_dets: None,
    };
    let report = evaluate(&fused.sets, &gts_val, &eval_cfg)?;
    write_atomic(
        &args.out.join("report.md"),
        render_markdown(&report).as_bytes(),
    )?;
    println!(
        "[5/5] eval: mAP(0.5) {}",
        report
            .map_50
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "n/a".into())
    );
    println!("artifacts in {}", args.out.display());
    Ok(())
}
