use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use detfuse::dataio::{load_predictions, predictions_to_json, PredictionsFile};
use detfuse::fusion::{merge_multiscale, nms, wbf, DetectionSet, FusionConfig};
use detfuse::geometry::ImageMeta;

use crate::util::{parse_weights, write_atomic};

#[derive(Args)]
pub struct FuseArgs {
    /// Prediction files, one per source (repeatable)
    #[arg(long = "pred", required = true, num_args = 1..)]
    pub preds: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Wbf)]
    pub method: Method,
    /// Cluster/suppression IoU threshold (default 0.55 for wbf, 0.5 for nms)
    #[arg(long = "iou-thr")]
    pub iou_thr: Option<f64>,
    /// Per-source weights, e.g. yolo=2,cascade=1
    #[arg(long)]
    pub weights: Option<String>,
    /// Drop boxes below this confidence before fusing
    #[arg(long = "skip-thr")]
    pub skip_thr: Option<f64>,
    /// Disable the min(T,N)/N confidence rescale
    #[arg(long)]
    pub no_count_rescale: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Wbf,
    Nms,
}

/// Fuse per-image detection sets across sources.
///
/// Frames of different sizes are handled by the multi-scale path: every
/// frame must then carry a scale tag, and boxes are merged in the original
/// (scale 1.0) frame.
pub fn fuse_sources(
    files: &[PredictionsFile],
    cfg: &FusionConfig,
    method: Method,
) -> Result<BTreeMap<String, DetectionSet>> {
    let mut image_ids: Vec<String> = Vec::new();
    for f in files {
        for id in f.sets.keys() {
            if !image_ids.contains(id) {
                image_ids.push(id.clone());
            }
        }
    }
    image_ids.sort();

    let mut fused = BTreeMap::new();
    for id in image_ids {
        let sets: Vec<DetectionSet> = files
            .iter()
            .filter_map(|f| f.sets.get(&id).cloned())
            .collect();
        let same_frame = sets
            .windows(2)
            .all(|w| w[0].frame.width == w[1].frame.width && w[0].frame.height == w[1].frame.height);

        let merged = match method {
            Method::Wbf if same_frame => wbf(&sets, cfg)?,
            Method::Wbf => {
                let original = original_frame(&sets)
                    .with_context(|| format!("deriving original frame of image {id}"))?;
                merge_multiscale(&sets, &original, cfg)?
            }
            Method::Nms => {
                if !same_frame {
                    bail!("nms needs a common frame across sources (image {id})");
                }
                let pooled = DetectionSet {
                    image_id: id.clone(),
                    source_id: "nms".into(),
                    frame: sets[0].frame.clone(),
                    boxes: sets.iter().flat_map(|s| s.boxes.iter().copied()).collect(),
                };
                nms(&pooled, cfg.iou_threshold)?
            }
        };
        fused.insert(id, merged);
    }
    Ok(fused)
}

/// Reconstruct the scale-1.0 frame from tagged TTA renditions.
fn original_frame(sets: &[DetectionSet]) -> Result<ImageMeta> {
    let mut original: Option<(u32, u32)> = None;
    for s in sets {
        let Some(tag) = s.frame.scale_tag else {
            bail!(
                "source {} has a different frame size but no scale_tag",
                s.source_id
            );
        };
        let w = (s.frame.width as f64 / tag).round() as u32;
        let h = (s.frame.height as f64 / tag).round() as u32;
        match original {
            None => original = Some((w, h)),
            Some(prev) if prev != (w, h) => {
                bail!(
                    "sources disagree on the original frame: {}x{} vs {}x{}",
                    prev.0,
                    prev.1,
                    w,
                    h
                );
            }
            Some(_) => {}
        }
    }
    let (w, h) = original.expect("at least one set");
    Ok(ImageMeta::new(sets[0].image_id.clone(), w, h)?.with_scale(1.0)?)
}

pub fn run(args: FuseArgs) -> Result<()> {
    let files: Vec<PredictionsFile> = args
        .preds
        .iter()
        .map(|p| load_predictions(p).map_err(Into::into))
        .collect::<Result<_>>()?;
    for f in &files[1..] {
        if f.classes != files[0].classes {
            bail!(
                "prediction files disagree on categories ({} vs {})",
                files[0].source_id,
                f.source_id
            );
        }
    }

    let cfg = FusionConfig {
        iou_threshold: args.iou_thr.unwrap_or(match args.method {
            Method::Wbf => 0.55,
            Method::Nms => 0.5,
        }),
        source_weights: match &args.weights {
            Some(spec) => parse_weights(spec)?,
            None => BTreeMap::new(),
        },
        skip_threshold: args.skip_thr.unwrap_or(0.0),
        count_rescale: !args.no_count_rescale,
    };
    cfg.validate()?;

    let sets = fuse_sources(&files, &cfg, args.method)?;
    let boxes: usize = sets.values().map(|s| s.boxes.len()).sum();
    let out_file = PredictionsFile {
        source_id: match args.method {
            Method::Wbf => "wbf".into(),
            Method::Nms => "nms".into(),
        },
        classes: files[0].classes.clone(),
        sets,
    };
    write_atomic(&args.out, predictions_to_json(&out_file)?.as_bytes())?;
    println!(
        "fused {} sources into {} boxes -> {}",
        files.len(),
        boxes,
        args.out.display()
    );
    Ok(())
}
