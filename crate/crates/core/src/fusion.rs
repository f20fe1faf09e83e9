//! Detection merging across models and TTA scales: Weighted Boxes Fusion,
//! a greedy NMS baseline, and the multi-scale merge step.
//!
//! WBF clustering rule, pinned for reproducibility: boxes are visited in
//! descending confidence (ties broken by source id, then by index within the
//! source); each box joins the first existing same-class cluster whose
//! *running fused box* overlaps it with IoU >= the threshold, else it seeds a
//! new cluster. A cluster's fused coordinates are the weighted average of its
//! members with weights `confidence * source_weight`; its confidence is the
//! source-weighted mean of member confidences. With `count_rescale` on, the
//! fused confidence is multiplied by `min(T, N) / N`, `N` = number of input
//! sources, `T` = distinct sources in the cluster, which penalizes boxes few
//! models agree on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, rescale, BBox, ImageMeta};

/// All predicted boxes for one image from one source (model x scale).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSet {
    pub image_id: String,
    pub source_id: String,
    pub frame: ImageMeta,
    pub boxes: Vec<BBox>,
}

impl DetectionSet {
    pub fn new(
        image_id: impl Into<String>,
        source_id: impl Into<String>,
        frame: ImageMeta,
        boxes: Vec<BBox>,
    ) -> Result<Self> {
        let image_id = image_id.into();
        if frame.image_id != image_id {
            return Err(Error::ImageIdMismatch {
                left: image_id,
                right: frame.image_id.clone(),
            });
        }
        Ok(DetectionSet {
            image_id,
            source_id: source_id.into(),
            frame,
            boxes,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }
}

fn default_iou_threshold() -> f64 {
    0.55
}
fn default_count_rescale() -> bool {
    true
}

/// Fusion knobs. All constants of the method are exposed here; per-source
/// weights default to 1.0 for sources not listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    #[serde(default = "default_iou_threshold")]
    pub iou_threshold: f64,
    #[serde(default)]
    pub source_weights: BTreeMap<String, f64>,
    #[serde(default)]
    pub skip_threshold: f64,
    #[serde(default = "default_count_rescale")]
    pub count_rescale: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            iou_threshold: default_iou_threshold(),
            source_weights: BTreeMap::new(),
            skip_threshold: 0.0,
            count_rescale: true,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.iou_threshold;
        if t.is_nan() || t <= 0.0 || t > 1.0 {
            return Err(Error::InvalidParam(format!(
                "fusion iou_threshold must be in (0,1], got {}",
                self.iou_threshold
            )));
        }
        if !(0.0..1.0).contains(&self.skip_threshold) {
            return Err(Error::InvalidParam(format!(
                "fusion skip_threshold must be in [0,1), got {}",
                self.skip_threshold
            )));
        }
        for (k, v) in &self.source_weights {
            if v.is_nan() || *v <= 0.0 {
                return Err(Error::InvalidParam(format!(
                    "source weight for {k:?} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn weight_of(&self, source_id: &str) -> f64 {
        self.source_weights.get(source_id).copied().unwrap_or(1.0)
    }
}

struct Candidate {
    bbox: BBox,
    source_index: usize,
    weight: f64,
}

struct Cluster {
    class_id: u32,
    fused: BBox,
    members: Vec<Candidate>,
    order: usize,
}

impl Cluster {
    // Weighted means are anchored at the seed box, so clusters whose members
    // agree fuse to exactly the agreed values.
    fn refuse(&mut self, source_weight_of: impl Fn(usize) -> f64) {
        let anchor = self.members[0].bbox;
        let mut w_sum = 0.0;
        let mut delta = [0.0f64; 4];
        let mut sw_sum = 0.0;
        let mut conf_delta = 0.0;
        for m in &self.members {
            let sw = source_weight_of(m.source_index);
            let w = m.weight;
            w_sum += w;
            delta[0] += w * (m.bbox.x_min - anchor.x_min);
            delta[1] += w * (m.bbox.y_min - anchor.y_min);
            delta[2] += w * (m.bbox.x_max - anchor.x_max);
            delta[3] += w * (m.bbox.y_max - anchor.y_max);
            sw_sum += sw;
            conf_delta += sw * (m.bbox.confidence - anchor.confidence);
        }
        if w_sum <= 0.0 {
            // all-zero confidences: fall back to source weights alone
            delta = [0.0; 4];
            for m in &self.members {
                let sw = source_weight_of(m.source_index);
                delta[0] += sw * (m.bbox.x_min - anchor.x_min);
                delta[1] += sw * (m.bbox.y_min - anchor.y_min);
                delta[2] += sw * (m.bbox.x_max - anchor.x_max);
                delta[3] += sw * (m.bbox.y_max - anchor.y_max);
            }
            w_sum = sw_sum;
        }
        self.fused = BBox {
            x_min: anchor.x_min + delta[0] / w_sum,
            y_min: anchor.y_min + delta[1] / w_sum,
            x_max: anchor.x_max + delta[2] / w_sum,
            y_max: anchor.y_max + delta[3] / w_sum,
            class_id: self.class_id,
            confidence: anchor.confidence + conf_delta / sw_sum,
        };
    }
}

/// Weighted Boxes Fusion over detection sets that already share a frame.
///
/// Empty input yields an empty set; mixed image ids or frames are an error.
pub fn wbf(sets: &[DetectionSet], cfg: &FusionConfig) -> Result<DetectionSet> {
    cfg.validate()?;
    let Some(first) = sets.first() else {
        return Ok(DetectionSet {
            image_id: String::new(),
            source_id: "wbf".into(),
            frame: ImageMeta {
                image_id: String::new(),
                width: 1,
                height: 1,
                scale_tag: None,
            },
            boxes: Vec::new(),
        });
    };
    for s in sets {
        if s.image_id != first.image_id {
            return Err(Error::ImageIdMismatch {
                left: first.image_id.clone(),
                right: s.image_id.clone(),
            });
        }
        if s.frame.width != first.frame.width || s.frame.height != first.frame.height {
            return Err(Error::FrameMismatch {
                image_id: first.image_id.clone(),
                detail: format!(
                    "{}x{} ({}) vs {}x{} ({}); rescale to a common frame first",
                    first.frame.width,
                    first.frame.height,
                    first.source_id,
                    s.frame.width,
                    s.frame.height,
                    s.source_id
                ),
            });
        }
    }

    let n_sources = sets.len();
    let source_weights: Vec<f64> = sets.iter().map(|s| cfg.weight_of(&s.source_id)).collect();

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut sort_keys: Vec<(usize, usize)> = Vec::new(); // (source index, index within source)
    for (si, set) in sets.iter().enumerate() {
        for (bi, b) in set.boxes.iter().enumerate() {
            if b.confidence < cfg.skip_threshold {
                continue;
            }
            candidates.push(Candidate {
                bbox: *b,
                source_index: si,
                weight: b.confidence * source_weights[si],
            });
            sort_keys.push((si, bi));
        }
    }

    // descending confidence; ties by (source_id, index within source)
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        candidates[b]
            .bbox
            .confidence
            .partial_cmp(&candidates[a].bbox.confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                let (sa, ia) = sort_keys[a];
                let (sb, ib) = sort_keys[b];
                sets[sa]
                    .source_id
                    .cmp(&sets[sb].source_id)
                    .then(ia.cmp(&ib))
            })
    });

    let mut clusters: Vec<Cluster> = Vec::new();
    for idx in order {
        let cand = &candidates[idx];
        let target = clusters.iter().position(|cl| {
            cl.class_id == cand.bbox.class_id && iou(&cl.fused, &cand.bbox) >= cfg.iou_threshold
        });
        let cand = Candidate {
            bbox: candidates[idx].bbox,
            source_index: candidates[idx].source_index,
            weight: candidates[idx].weight,
        };
        match target {
            Some(ci) => {
                clusters[ci].members.push(cand);
                clusters[ci].refuse(|si| source_weights[si]);
            }
            None => {
                let order = clusters.len();
                let mut cl = Cluster {
                    class_id: cand.bbox.class_id,
                    fused: cand.bbox,
                    members: vec![cand],
                    order,
                };
                cl.refuse(|si| source_weights[si]);
                clusters.push(cl);
            }
        }
    }

    let mut fused: Vec<(usize, BBox)> = clusters
        .iter()
        .map(|cl| {
            let mut b = cl.fused;
            if cfg.count_rescale {
                let mut seen = vec![false; n_sources];
                for m in &cl.members {
                    seen[m.source_index] = true;
                }
                let t = seen.iter().filter(|&&s| s).count();
                b.confidence *= t.min(n_sources) as f64 / n_sources as f64;
            }
            (cl.order, b)
        })
        .collect();

    // confidence descending; ties keep cluster creation order
    fused.sort_by(|a, b| {
        b.1.confidence
            .partial_cmp(&a.1.confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });

    Ok(DetectionSet {
        image_id: first.image_id.clone(),
        source_id: "wbf".into(),
        frame: first.frame.clone(),
        boxes: fused.into_iter().map(|(_, b)| b).collect(),
    })
}

/// Greedy per-class non-maximum suppression: keep the highest-confidence box,
/// drop same-class boxes with IoU >= threshold against any kept box.
pub fn nms(set: &DetectionSet, iou_threshold: f64) -> Result<DetectionSet> {
    if iou_threshold.is_nan() || iou_threshold <= 0.0 || iou_threshold > 1.0 {
        return Err(Error::InvalidParam(format!(
            "nms iou threshold must be in (0,1], got {iou_threshold}"
        )));
    }
    let mut order: Vec<usize> = (0..set.boxes.len()).collect();
    order.sort_by(|&a, &b| {
        set.boxes[b]
            .confidence
            .partial_cmp(&set.boxes[a].confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut kept: Vec<BBox> = Vec::new();
    for &i in &order {
        let b = &set.boxes[i];
        let suppressed = kept
            .iter()
            .any(|k| k.class_id == b.class_id && iou(k, b) >= iou_threshold);
        if !suppressed {
            kept.push(*b);
        }
    }

    Ok(DetectionSet {
        image_id: set.image_id.clone(),
        source_id: set.source_id.clone(),
        frame: set.frame.clone(),
        boxes: kept,
    })
}

/// Rescale every set to the original frame, then fuse with [`wbf`].
///
/// Every input frame must carry a scale tag (it marks the TTA rendition).
pub fn merge_multiscale(
    sets: &[DetectionSet],
    original: &ImageMeta,
    cfg: &FusionConfig,
) -> Result<DetectionSet> {
    let mut rescaled = Vec::with_capacity(sets.len());
    for s in sets {
        if s.frame.scale_tag.is_none() {
            return Err(Error::MissingScaleTag(format!(
                "{} / {}",
                s.image_id, s.source_id
            )));
        }
        let boxes = s
            .boxes
            .iter()
            .map(|b| rescale(b, &s.frame, original))
            .collect::<Result<Vec<_>>>()?;
        rescaled.push(DetectionSet {
            image_id: s.image_id.clone(),
            source_id: s.source_id.clone(),
            frame: original.clone(),
            boxes,
        });
    }
    wbf(&rescaled, cfg)
}
