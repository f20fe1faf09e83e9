//! Robustness sweep harness: evaluate a detector source over a list of noise
//! conditions and report per-condition mAP plus the delta against the clean
//! baseline.
//!
//! Detections come either from recorded prediction files (one per condition,
//! so real-model results can be replayed verbatim) or from a simulated
//! detector that jitters the ground truth. Severity parameterization: the
//! k-th condition of the sweep has severity `k` ("none" is always first with
//! severity 0); the simulated detector scales its coordinate noise, miss
//! probability and spurious-box rate linearly with severity and decays
//! confidence by `confidence_decay * severity`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::augment::{AugmentKind, AugmentSpec};
use crate::dataio::{load_predictions_with, DatasetManifest};
use crate::error::{Error, Result};
use crate::eval::{coco_thresholds, evaluate, EvalConfig, GroundTruth};
use crate::fusion::DetectionSet;
use crate::geometry::{BBox, ImageMeta};
use crate::rng::{derive_seed, rng_from_seed};

/// One sweep column: a named test-image condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCondition {
    pub name: String,
    /// The augmentation that produces this condition's test images; kept for
    /// documentation and for regenerating polluted image sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augment: Option<AugmentSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMetric {
    #[default]
    Map50,
    Map5095,
}

impl SweepMetric {
    pub fn label(&self) -> &'static str {
        match self {
            SweepMetric::Map50 => "mAP(0.5)",
            SweepMetric::Map5095 => "mAP(0.5:0.95)",
        }
    }
}

/// The sweep definition. `normalized()` guarantees the "none" baseline is
/// present and first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweep {
    pub conditions: Vec<NoiseCondition>,
    #[serde(default)]
    pub metric: SweepMetric,
    pub seed: u64,
}

impl NoiseSweep {
    /// The paper-profile sweep: none, gaussian, salt & pepper, fog, blur.
    pub fn paper_default(seed: u64) -> Self {
        let cond = |name: &str, kind: Option<AugmentKind>| NoiseCondition {
            name: name.into(),
            augment: kind.map(AugmentSpec::new),
        };
        NoiseSweep {
            conditions: vec![
                cond("none", None),
                cond(
                    "gaussian",
                    Some(AugmentKind::GaussianNoise {
                        mean: 0.0,
                        std: 0.2,
                    }),
                ),
                cond(
                    "salt_pepper",
                    Some(AugmentKind::SaltPepper {
                        number: 500,
                        per_megapixel: false,
                    }),
                ),
                cond(
                    "fog",
                    Some(AugmentKind::Fog {
                        brightness: 0.4,
                        concentration: 0.03,
                    }),
                ),
                cond("blur", Some(AugmentKind::Blur { kernelsize: (6, 6) })),
            ],
            metric: SweepMetric::Map50,
            seed,
        }
    }

    /// Move (or insert) the "none" baseline to the front.
    pub fn normalized(mut self) -> Self {
        match self.conditions.iter().position(|c| c.name == "none") {
            Some(0) => {}
            Some(i) => {
                let c = self.conditions.remove(i);
                self.conditions.insert(0, c);
            }
            None => self.conditions.insert(
                0,
                NoiseCondition {
                    name: "none".into(),
                    augment: None,
                },
            ),
        }
        self
    }
}

/// Simulated-detector parameters, all per severity unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterModel {
    /// Std of the Gaussian added to each box coordinate, in pixels.
    #[serde(default)]
    pub sigma_xy: f64,
    /// Confidence lost per severity unit.
    #[serde(default)]
    pub confidence_decay: f64,
    /// Probability of dropping a ground-truth box.
    #[serde(default)]
    pub miss_probability: f64,
    /// Expected spurious boxes per image.
    #[serde(default)]
    pub spurious_rate: f64,
    #[serde(default = "default_base_confidence")]
    pub base_confidence: f64,
    /// Std of the confidence perturbation.
    #[serde(default)]
    pub confidence_noise: f64,
}

fn default_base_confidence() -> f64 {
    0.9
}

impl Default for JitterModel {
    fn default() -> Self {
        JitterModel {
            sigma_xy: 0.0,
            confidence_decay: 0.0,
            miss_probability: 0.0,
            spurious_rate: 0.0,
            base_confidence: default_base_confidence(),
            confidence_noise: 0.0,
        }
    }
}

impl JitterModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_xy", self.sigma_xy),
            ("confidence_decay", self.confidence_decay),
            ("spurious_rate", self.spurious_rate),
            ("confidence_noise", self.confidence_noise),
        ] {
            if v < 0.0 || v.is_nan() {
                return Err(Error::InvalidParam(format!(
                    "jitter {name} must be >= 0, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.miss_probability) {
            return Err(Error::InvalidParam(format!(
                "miss_probability must be in [0,1], got {}",
                self.miss_probability
            )));
        }
        if !(0.0..=1.0).contains(&self.base_confidence) {
            return Err(Error::InvalidParam(format!(
                "base_confidence must be in [0,1], got {}",
                self.base_confidence
            )));
        }
        Ok(())
    }
}

/// Where detections come from.
#[derive(Debug, Clone)]
pub enum DetectorSource {
    /// condition name -> prediction file
    Recorded(BTreeMap<String, PathBuf>),
    Simulated(JitterModel),
}

/// Jittered detections for one image at the given severity.
///
/// Draw order per ground-truth box: miss, then four coordinate offsets, then
/// the confidence perturbation; afterwards the spurious count and, per
/// spurious box, x-pair, y-pair, class, confidence.
pub fn simulate_detections(
    gt: &GroundTruth,
    frame: &ImageMeta,
    model: &JitterModel,
    severity: f64,
    seed: u64,
    class_count: u32,
) -> Result<DetectionSet> {
    model.validate()?;
    let mut rng = rng_from_seed(seed);
    let sigma = model.sigma_xy * severity;
    let miss = (model.miss_probability * severity).clamp(0.0, 1.0);
    let spurious = model.spurious_rate * severity;
    let coord_noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidParam(format!("coordinate noise: {e}")))?;
    let conf_noise = Normal::new(0.0, model.confidence_noise)
        .map_err(|e| Error::InvalidParam(format!("confidence noise: {e}")))?;
    let (w, h) = (frame.width as f64, frame.height as f64);

    let mut boxes = Vec::new();
    for b in &gt.boxes {
        if rng.random_bool(miss) {
            continue;
        }
        let mut x0 = b.x_min + coord_noise.sample(&mut rng);
        let mut y0 = b.y_min + coord_noise.sample(&mut rng);
        let mut x1 = b.x_max + coord_noise.sample(&mut rng);
        let mut y1 = b.y_max + coord_noise.sample(&mut rng);
        if x0 > x1 {
            std::mem::swap(&mut x0, &mut x1);
        }
        if y0 > y1 {
            std::mem::swap(&mut y0, &mut y1);
        }
        let confidence = (model.base_confidence - model.confidence_decay * severity
            + conf_noise.sample(&mut rng))
        .clamp(0.0, 1.0);
        boxes.push(BBox {
            x_min: x0.clamp(0.0, w),
            y_min: y0.clamp(0.0, h),
            x_max: x1.clamp(0.0, w),
            y_max: y1.clamp(0.0, h),
            class_id: b.class_id,
            confidence,
        });
    }

    let count = spurious.floor() as u64
        + if rng.random_bool(spurious.fract().clamp(0.0, 1.0)) {
            1
        } else {
            0
        };
    for _ in 0..count {
        let (a, b) = (rng.random_range(0.0..w), rng.random_range(0.0..w));
        let (c, d) = (rng.random_range(0.0..h), rng.random_range(0.0..h));
        let class_id = if class_count > 0 {
            rng.random_range(0..class_count)
        } else {
            0
        };
        let confidence = rng.random::<f64>() * model.base_confidence;
        boxes.push(BBox {
            x_min: a.min(b),
            y_min: c.min(d),
            x_max: a.max(b),
            y_max: c.max(d),
            class_id,
            confidence,
        });
    }

    Ok(DetectionSet {
        image_id: gt.image_id.clone(),
        source_id: "simulated".into(),
        frame: ImageMeta {
            image_id: gt.image_id.clone(),
            ..frame.clone()
        },
        boxes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub name: String,
    pub cells: Vec<f64>,
    /// `cells[i] - cells[0]`; the baseline delta is exactly 0.
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub metric: String,
    pub conditions: Vec<String>,
    pub rows: Vec<RobustnessRow>,
}

impl RobustnessReport {
    /// Markdown table: conditions as columns, one row per detector variant
    /// plus its delta row.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# Robustness report ({})\n\n", self.metric));
        out.push_str("| Noise |");
        for c in &self.conditions {
            out.push_str(&format!(" {c} |"));
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &self.conditions {
            out.push_str("---|");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("| {} |", row.name));
            for v in &row.cells {
                out.push_str(&format!(" {v:.4} |"));
            }
            out.push('\n');
            out.push_str(&format!("| {} (Δ vs none) |", row.name));
            for d in &row.deltas {
                out.push_str(&format!(" {d:+.4} |"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("source,condition,value,delta_vs_none\n");
        for row in &self.rows {
            for ((c, v), d) in self.conditions.iter().zip(&row.cells).zip(&row.deltas) {
                out.push_str(&format!("{},{},{:.6},{:.6}\n", row.name, c, v, d));
            }
        }
        out
    }
}

/// Run one detector source across the sweep and fill a single-row report.
pub fn run_sweep(
    manifest: &DatasetManifest,
    gts: &BTreeMap<String, GroundTruth>,
    label: &str,
    source: &DetectorSource,
    sweep: &NoiseSweep,
) -> Result<RobustnessReport> {
    if gts.is_empty() {
        return Err(Error::InvalidParam("robustness sweep needs ground truth".into()));
    }
    let sweep = sweep.clone().normalized();
    let eval_cfg = EvalConfig {
        iou_thresholds: match sweep.metric {
            SweepMetric::Map50 => vec![0.5],
            SweepMetric::Map5095 => coco_thresholds(),
        },
        ..EvalConfig::default()
    };
    let class_count = manifest.classes.len() as u32;
    let frames: BTreeMap<String, ImageMeta> = manifest
        .entries
        .iter()
        .map(|e| (e.image_id.clone(), e.frame()))
        .collect();

    let mut cells = Vec::with_capacity(sweep.conditions.len());
    for (index, condition) in sweep.conditions.iter().enumerate() {
        let preds: BTreeMap<String, DetectionSet> = match source {
            DetectorSource::Recorded(files) => {
                let path = files
                    .get(&condition.name)
                    .ok_or_else(|| Error::MissingCondition(condition.name.clone()))?;
                load_predictions_with(path, &manifest.classes)?.sets
            }
            DetectorSource::Simulated(model) => {
                let severity = index as f64;
                let mut sets = BTreeMap::new();
                for (id, gt) in gts {
                    let frame = frames.get(id).cloned().unwrap_or_else(|| ImageMeta {
                        image_id: id.clone(),
                        width: 1,
                        height: 1,
                        scale_tag: None,
                    });
                    let seed = derive_seed(sweep.seed, index as u64, id);
                    sets.insert(
                        id.clone(),
                        simulate_detections(gt, &frame, model, severity, seed, class_count)?,
                    );
                }
                sets
            }
        };
        let report = evaluate(&preds, gts, &eval_cfg)?;
        let value = match sweep.metric {
            SweepMetric::Map50 => report.map_50,
            SweepMetric::Map5095 => report.map_50_95,
        }
        .unwrap_or(0.0);
        cells.push(value);
    }

    let baseline = cells[0];
    let deltas = cells.iter().map(|v| v - baseline).collect();
    Ok(RobustnessReport {
        metric: sweep.metric.label().to_string(),
        conditions: sweep.conditions.iter().map(|c| c.name.clone()).collect(),
        rows: vec![RobustnessRow {
            name: label.to_string(),
            cells,
            deltas,
        }],
    })
}
