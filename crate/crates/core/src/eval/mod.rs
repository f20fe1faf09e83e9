//! COCO-style detection evaluation: greedy matching, 101-point interpolated
//! average precision, and the aggregate report (mAP at 0.5 / 0.75 /
//! 0.5:0.95, mIoU, macro precision and recall).
//!
//! Matching convention (it changes results on crowded images, so it is
//! pinned): predictions are visited in descending confidence, ties broken by
//! input index; each takes the unmatched same-class ground-truth box of
//! highest IoU at or above the threshold, IoU ties broken by lower ground
//! truth index. Dataset-wide rankings break confidence ties by (image id,
//! prediction index).

mod report;

pub use report::{render_csv, render_json, render_markdown, render_table};

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::DetectionSet;
use crate::geometry::{iou, BBox};
use crate::postprocess::ClassThresholds;

/// Labeled boxes for one image; confidences are pinned to 1.0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub image_id: String,
    pub boxes: Vec<BBox>,
}

impl GroundTruth {
    pub fn new(image_id: impl Into<String>, boxes: Vec<BBox>) -> Self {
        GroundTruth {
            image_id: image_id.into(),
            boxes: boxes.into_iter().map(|b| b.with_confidence(1.0)).collect(),
        }
    }
}

/// One-to-one matching outcome for a single image at one IoU threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// (prediction index, ground-truth index, IoU) per matched pair.
    pub matches: Vec<(usize, usize, f64)>,
    pub unmatched_preds: Vec<usize>,
    pub unmatched_gts: Vec<usize>,
}

/// Greedy one-to-one matching between predictions and ground truth.
pub fn match_detections(
    preds: &DetectionSet,
    gt: &GroundTruth,
    iou_thr: f64,
) -> Result<MatchResult> {
    if preds.image_id != gt.image_id {
        return Err(Error::ImageIdMismatch {
            left: preds.image_id.clone(),
            right: gt.image_id.clone(),
        });
    }
    Ok(match_boxes(&preds.boxes, &gt.boxes, iou_thr))
}

fn match_boxes(preds: &[BBox], gts: &[BBox], iou_thr: f64) -> MatchResult {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .confidence
            .partial_cmp(&preds[a].confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut gt_taken = vec![false; gts.len()];
    let mut matches = Vec::new();
    let mut unmatched_preds = Vec::new();

    for &pi in &order {
        let p = &preds[pi];
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gts.iter().enumerate() {
            if gt_taken[gi] || g.class_id != p.class_id {
                continue;
            }
            let ov = iou(p, g);
            if ov < iou_thr {
                continue;
            }
            // strict improvement only, so IoU ties keep the lower gt index
            if best.is_none_or(|(_, b)| ov > b) {
                best = Some((gi, ov));
            }
        }
        match best {
            Some((gi, ov)) => {
                gt_taken[gi] = true;
                matches.push((pi, gi, ov));
            }
            None => unmatched_preds.push(pi),
        }
    }

    matches.sort_by_key(|&(pi, _, _)| pi);
    unmatched_preds.sort_unstable();
    let unmatched_gts = gt_taken
        .iter()
        .enumerate()
        .filter(|(_, taken)| !**taken)
        .map(|(gi, _)| gi)
        .collect();

    MatchResult {
        matches,
        unmatched_preds,
        unmatched_gts,
    }
}

/// Which definition the report's mIoU column uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiouMode {
    /// Mean IoU over true-positive matches at IoU threshold 0.5 (default).
    TpAtHalf,
    /// Mean over ground-truth boxes of the best same-class prediction IoU,
    /// regardless of threshold; unfound boxes contribute 0.
    BestMatch,
}

impl MiouMode {
    pub fn definition(&self) -> &'static str {
        match self {
            MiouMode::TpAtHalf => "mean IoU over true-positive matches at IoU 0.50",
            MiouMode::BestMatch => {
                "mean best same-class IoU per ground-truth box, no threshold"
            }
        }
    }
}

/// The ten-threshold COCO ladder 0.50, 0.55, .., 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

/// Evaluation profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_thresholds: Vec<f64>,
    /// Operating confidence thresholds for the single precision/recall
    /// numbers; a prediction counts only when confidence is strictly above
    /// its class threshold.
    pub operating: ClassThresholds,
    pub miou_mode: MiouMode,
    /// Optional per-image cap on predictions (highest confidence first).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dets: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_thresholds: coco_thresholds(),
            operating: ClassThresholds::uniform(0.5),
            miou_mode: MiouMode::TpAtHalf,
            max_dets: None,
        }
    }
}

/// Per-class metrics, one slot per IoU threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEval {
    pub class_id: u32,
    pub gt_count: usize,
    pub pred_count: usize,
    pub ap: Vec<Option<f64>>,
    pub precision: Vec<Option<f64>>,
    pub recall: Vec<Option<f64>>,
}

/// The full evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_thresholds: Vec<f64>,
    pub per_class: Vec<ClassEval>,
    pub map_per_threshold: Vec<Option<f64>>,
    pub map_50: Option<f64>,
    pub map_75: Option<f64>,
    pub map_50_95: Option<f64>,
    pub miou: Option<f64>,
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub miou_definition: String,
}

/// Dataset-wide average precision for one class at one IoU threshold.
///
/// `None` when the class never occurs in the ground truth (such classes are
/// excluded from mAP means).
pub fn average_precision(
    preds: &BTreeMap<String, DetectionSet>,
    gts: &BTreeMap<String, GroundTruth>,
    class_id: u32,
    iou_thr: f64,
) -> Result<Option<f64>> {
    check_image_ids(preds, gts)?;
    let records = dataset_records(preds, gts, iou_thr, None);
    let npos = gts
        .values()
        .flat_map(|g| &g.boxes)
        .filter(|b| b.class_id == class_id)
        .count();
    Ok(ap_from_records(
        records.iter().filter(|r| r.class_id == class_id),
        npos,
    ))
}

/// Fill the whole report.
pub fn evaluate(
    preds: &BTreeMap<String, DetectionSet>,
    gts: &BTreeMap<String, GroundTruth>,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if cfg.iou_thresholds.is_empty() {
        return Err(Error::InvalidParam("no IoU thresholds given".into()));
    }
    cfg.operating.validate()?;
    check_image_ids(preds, gts)?;

    let capped: BTreeMap<String, DetectionSet> = match cfg.max_dets {
        None => preds.clone(),
        Some(cap) => preds
            .iter()
            .map(|(id, set)| {
                let mut order: Vec<usize> = (0..set.boxes.len()).collect();
                order.sort_by(|&a, &b| {
                    set.boxes[b]
                        .confidence
                        .partial_cmp(&set.boxes[a].confidence)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                order.truncate(cap);
                order.sort_unstable();
                let boxes = order.iter().map(|&i| set.boxes[i]).collect();
                (
                    id.clone(),
                    DetectionSet {
                        boxes,
                        ..set.clone()
                    },
                )
            })
            .collect(),
    };
    let preds = &capped;

    let mut classes: BTreeSet<u32> = BTreeSet::new();
    let mut gt_counts: BTreeMap<u32, usize> = BTreeMap::new();
    for g in gts.values() {
        for b in &g.boxes {
            classes.insert(b.class_id);
            *gt_counts.entry(b.class_id).or_default() += 1;
        }
    }
    let mut pred_counts: BTreeMap<u32, usize> = BTreeMap::new();
    for s in preds.values() {
        for b in &s.boxes {
            classes.insert(b.class_id);
            *pred_counts.entry(b.class_id).or_default() += 1;
        }
    }
    let classes: Vec<u32> = classes.into_iter().collect();

    // operating-point sets, filtered by per-class confidence cutoffs
    let operating: BTreeMap<String, DetectionSet> = preds
        .iter()
        .map(|(id, s)| {
            (
                id.clone(),
                crate::postprocess::filter_confidence(s, &cfg.operating),
            )
        })
        .collect();

    struct PerThreshold {
        ap: BTreeMap<u32, Option<f64>>,
        precision: BTreeMap<u32, Option<f64>>,
        recall: BTreeMap<u32, Option<f64>>,
    }

    let per_threshold: Vec<PerThreshold> = cfg
        .iou_thresholds
        .par_iter()
        .map(|&thr| {
            let records = dataset_records(preds, gts, thr, None);
            let mut ap = BTreeMap::new();
            for &c in &classes {
                let npos = gt_counts.get(&c).copied().unwrap_or(0);
                ap.insert(
                    c,
                    ap_from_records(records.iter().filter(|r| r.class_id == c), npos),
                );
            }

            // precision / recall at the operating point
            let mut tp: BTreeMap<u32, usize> = BTreeMap::new();
            let mut fp: BTreeMap<u32, usize> = BTreeMap::new();
            for (id, set) in &operating {
                let gt = &gts[id];
                let m = match_boxes(&set.boxes, &gt.boxes, thr);
                for &(pi, _, _) in &m.matches {
                    *tp.entry(set.boxes[pi].class_id).or_default() += 1;
                }
                for &pi in &m.unmatched_preds {
                    *fp.entry(set.boxes[pi].class_id).or_default() += 1;
                }
            }
            let mut precision = BTreeMap::new();
            let mut recall = BTreeMap::new();
            for &c in &classes {
                let t = tp.get(&c).copied().unwrap_or(0);
                let f = fp.get(&c).copied().unwrap_or(0);
                let npos = gt_counts.get(&c).copied().unwrap_or(0);
                precision.insert(
                    c,
                    if t + f == 0 {
                        None
                    } else {
                        Some(t as f64 / (t + f) as f64)
                    },
                );
                recall.insert(
                    c,
                    if npos == 0 {
                        None
                    } else {
                        Some(t as f64 / npos as f64)
                    },
                );
            }
            PerThreshold {
                ap,
                precision,
                recall,
            }
        })
        .collect();

    let per_class: Vec<ClassEval> = classes
        .iter()
        .map(|&c| ClassEval {
            class_id: c,
            gt_count: gt_counts.get(&c).copied().unwrap_or(0),
            pred_count: pred_counts.get(&c).copied().unwrap_or(0),
            ap: per_threshold.iter().map(|t| t.ap[&c]).collect(),
            precision: per_threshold.iter().map(|t| t.precision[&c]).collect(),
            recall: per_threshold.iter().map(|t| t.recall[&c]).collect(),
        })
        .collect();

    let map_per_threshold: Vec<Option<f64>> = per_threshold
        .iter()
        .map(|t| mean_of_present(t.ap.values().copied()))
        .collect();

    let thr_index = |wanted: f64| {
        cfg.iou_thresholds
            .iter()
            .position(|t| (t - wanted).abs() < 1e-9)
    };
    let map_50 = thr_index(0.5).and_then(|i| map_per_threshold[i]);
    let map_75 = thr_index(0.75).and_then(|i| map_per_threshold[i]);
    let map_50_95 = if is_coco_ladder(&cfg.iou_thresholds) {
        mean_of_present(map_per_threshold.iter().copied())
    } else {
        None
    };

    // headline macro precision/recall read at IoU 0.5 (first threshold if absent)
    let headline = thr_index(0.5).unwrap_or(0);
    let macro_precision = mean_of_present(
        per_class
            .iter()
            .filter(|c| c.gt_count > 0)
            .map(|c| c.precision[headline]),
    );
    let macro_recall = mean_of_present(
        per_class
            .iter()
            .filter(|c| c.gt_count > 0)
            .map(|c| c.recall[headline]),
    );

    let miou = compute_miou(preds, gts, cfg.miou_mode);

    Ok(EvalReport {
        iou_thresholds: cfg.iou_thresholds.clone(),
        per_class,
        map_per_threshold,
        map_50,
        map_75,
        map_50_95,
        miou,
        macro_precision,
        macro_recall,
        miou_definition: cfg.miou_mode.definition().to_string(),
    })
}

fn check_image_ids(
    preds: &BTreeMap<String, DetectionSet>,
    gts: &BTreeMap<String, GroundTruth>,
) -> Result<()> {
    let offenders: Vec<String> = preds
        .keys()
        .filter(|id| !gts.contains_key(*id))
        .cloned()
        .collect();
    if offenders.is_empty() {
        Ok(())
    } else {
        Err(Error::UnknownImageIds(offenders))
    }
}

struct RankRecord {
    confidence: f64,
    image_rank: usize,
    pred_index: usize,
    class_id: u32,
    matched: bool,
}

/// Per-prediction match records over the whole dataset, globally ranked by
/// confidence (ties by image id, then prediction index).
fn dataset_records(
    preds: &BTreeMap<String, DetectionSet>,
    gts: &BTreeMap<String, GroundTruth>,
    iou_thr: f64,
    class_filter: Option<u32>,
) -> Vec<RankRecord> {
    let mut records: Vec<RankRecord> = Vec::new();
    for (image_rank, (id, set)) in preds.iter().enumerate() {
        let gt = &gts[id];
        let m = match_boxes(&set.boxes, &gt.boxes, iou_thr);
        let mut matched = vec![false; set.boxes.len()];
        for &(pi, _, _) in &m.matches {
            matched[pi] = true;
        }
        for (pi, b) in set.boxes.iter().enumerate() {
            if class_filter.is_some_and(|c| c != b.class_id) {
                continue;
            }
            records.push(RankRecord {
                confidence: b.confidence,
                image_rank,
                pred_index: pi,
                class_id: b.class_id,
                matched: matched[pi],
            });
        }
    }
    records.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.image_rank.cmp(&b.image_rank))
            .then(a.pred_index.cmp(&b.pred_index))
    });
    records
}

/// 101-point interpolated AP from globally ranked records of one class.
fn ap_from_records<'a>(
    records: impl Iterator<Item = &'a RankRecord>,
    npos: usize,
) -> Option<f64> {
    if npos == 0 {
        return None;
    }
    let flags: Vec<bool> = records.map(|r| r.matched).collect();
    if flags.is_empty() {
        return Some(0.0);
    }
    let n = flags.len();
    let mut recall = Vec::with_capacity(n);
    let mut precision = Vec::with_capacity(n);
    let mut tp = 0usize;
    for (k, &is_tp) in flags.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        recall.push(tp as f64 / npos as f64);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    // precision envelope: max precision at or beyond each rank
    let mut envelope = precision.clone();
    for k in (0..n - 1).rev() {
        envelope[k] = envelope[k].max(envelope[k + 1]);
    }
    let mut sum = 0.0;
    let mut k = 0usize;
    for i in 0..=100u32 {
        let r = i as f64 / 100.0;
        while k < n && recall[k] < r {
            k += 1;
        }
        if k < n {
            sum += envelope[k];
        }
    }
    Some(sum / 101.0)
}

fn mean_of_present(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    if present.is_empty() {
        None
    } else {
        Some(present.iter().sum::<f64>() / present.len() as f64)
    }
}

fn is_coco_ladder(thresholds: &[f64]) -> bool {
    let ladder = coco_thresholds();
    thresholds.len() == ladder.len()
        && thresholds
            .iter()
            .zip(&ladder)
            .all(|(a, b)| (a - b).abs() < 1e-9)
}

fn compute_miou(
    preds: &BTreeMap<String, DetectionSet>,
    gts: &BTreeMap<String, GroundTruth>,
    mode: MiouMode,
) -> Option<f64> {
    match mode {
        MiouMode::TpAtHalf => {
            let mut ious = Vec::new();
            for (id, set) in preds {
                let m = match_boxes(&set.boxes, &gts[id].boxes, 0.5);
                ious.extend(m.matches.iter().map(|&(_, _, ov)| ov));
            }
            if ious.is_empty() {
                None
            } else {
                Some(ious.iter().sum::<f64>() / ious.len() as f64)
            }
        }
        MiouMode::BestMatch => {
            let mut total = 0.0;
            let mut count = 0usize;
            for (id, gt) in gts {
                let empty = Vec::new();
                let pred_boxes = preds.get(id).map(|s| &s.boxes).unwrap_or(&empty);
                for g in &gt.boxes {
                    let best = pred_boxes
                        .iter()
                        .filter(|p| p.class_id == g.class_id)
                        .map(|p| iou(p, g))
                        .fold(0.0f64, f64::max);
                    total += best;
                    count += 1;
                }
            }
            if count == 0 {
                None
            } else {
                Some(total / count as f64)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ImageMeta;

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64, class: u32, conf: f64) -> BBox {
        BBox::new(x0, y0, x1, y1, class, conf).unwrap()
    }

    fn det_set(id: &str, boxes: Vec<BBox>) -> DetectionSet {
        DetectionSet::new(id, "m", ImageMeta::new(id, 1000, 1000).unwrap(), boxes).unwrap()
    }

    fn one_image(
        preds: Vec<BBox>,
        gts: Vec<BBox>,
    ) -> (
        BTreeMap<String, DetectionSet>,
        BTreeMap<String, GroundTruth>,
    ) {
        let mut p = BTreeMap::new();
        p.insert("i".to_string(), det_set("i", preds));
        let mut g = BTreeMap::new();
        g.insert("i".to_string(), GroundTruth::new("i", gts));
        (p, g)
    }

    #[test]
    fn self_match_has_no_errors() {
        let boxes = vec![
            bx(0.0, 0.0, 10.0, 10.0, 0, 1.0),
            bx(20.0, 0.0, 30.0, 10.0, 1, 1.0),
        ];
        let m = match_boxes(&boxes, &boxes, 0.5);
        assert_eq!(m.matches.len(), 2);
        assert!(m.unmatched_preds.is_empty());
        assert!(m.unmatched_gts.is_empty());
    }

    #[test]
    fn no_preds_means_all_fn() {
        let gts = vec![bx(0.0, 0.0, 10.0, 10.0, 0, 1.0)];
        let m = match_boxes(&[], &gts, 0.5);
        assert_eq!(m.unmatched_gts, vec![0]);
    }

    #[test]
    fn confidence_priority_beats_iou() {
        // higher-confidence pred takes the GT even though the other overlaps more
        let gt = vec![bx(0.0, 0.0, 10.0, 10.0, 0, 1.0)];
        let preds = vec![
            bx(0.0, 0.0, 10.0, 7.0, 0, 0.9), // IoU 0.7
            bx(0.0, 0.0, 10.0, 9.0, 0, 0.8), // IoU 0.9
        ];
        let m = match_boxes(&preds, &gt, 0.5);
        assert_eq!(m.matches.len(), 1);
        assert_eq!(m.matches[0].0, 0);
        assert!((m.matches[0].2 - 0.7).abs() < 1e-12);
        assert_eq!(m.unmatched_preds, vec![1]);
    }

    #[test]
    fn perfect_detector_ap_is_one() {
        let boxes = vec![bx(0.0, 0.0, 10.0, 10.0, 0, 1.0)];
        let (p, g) = one_image(boxes.clone(), boxes);
        assert_eq!(average_precision(&p, &g, 0, 0.5).unwrap(), Some(1.0));
    }

    #[test]
    fn zero_tp_ap_is_zero() {
        let gts = vec![bx(0.0, 0.0, 10.0, 10.0, 0, 1.0)];
        let preds = vec![bx(500.0, 500.0, 510.0, 510.0, 0, 0.9)];
        let (p, g) = one_image(preds, gts);
        assert_eq!(average_precision(&p, &g, 0, 0.5).unwrap(), Some(0.0));
    }

    #[test]
    fn class_absent_from_gt_is_null() {
        let gts = vec![bx(0.0, 0.0, 10.0, 10.0, 0, 1.0)];
        let preds = vec![bx(0.0, 0.0, 10.0, 10.0, 7, 0.9)];
        let (p, g) = one_image(preds, gts);
        assert_eq!(average_precision(&p, &g, 7, 0.5).unwrap(), None);
    }

    #[test]
    fn hand_computed_pr_staircase() {
        // 5 GT, 7 ranked predictions, TP at ranks 1, 2, 4:
        // 41 recall points at precision 1.0, 20 at 0.75, rest 0 -> 56/101
        let gts: Vec<BBox> = (0..5)
            .map(|i| bx(20.0 * i as f64, 0.0, 20.0 * i as f64 + 10.0, 10.0, 0, 1.0))
            .collect();
        let far = |i: usize, conf: f64| {
            bx(
                300.0 + 20.0 * i as f64,
                0.0,
                310.0 + 20.0 * i as f64,
                10.0,
                0,
                conf,
            )
        };
        let preds = vec![
            gts[0].with_confidence(0.95),
            gts[1].with_confidence(0.90),
            far(0, 0.85),
            gts[2].with_confidence(0.80),
            far(1, 0.75),
            far(2, 0.70),
            far(3, 0.65),
        ];
        let (p, g) = one_image(preds, gts);
        let ap = average_precision(&p, &g, 0, 0.5).unwrap().unwrap();
        assert!(
            (ap - 56.0 / 101.0).abs() < 1e-9,
            "ap {ap} vs {}",
            56.0 / 101.0
        );
    }

    #[test]
    fn self_evaluation_identity() {
        let mut preds = BTreeMap::new();
        let mut gts = BTreeMap::new();
        for i in 0..4 {
            let id = format!("img_{i}");
            let boxes = vec![
                bx(0.0, 0.0, 50.0, 40.0, i % 3, 1.0),
                bx(100.0, 100.0, 180.0, 150.0, (i + 1) % 3, 1.0),
            ];
            preds.insert(id.clone(), det_set(&id, boxes.clone()));
            gts.insert(id.clone(), GroundTruth::new(&id, boxes));
        }
        let r = evaluate(&preds, &gts, &EvalConfig::default()).unwrap();
        assert_eq!(r.map_50, Some(1.0));
        assert_eq!(r.map_75, Some(1.0));
        assert_eq!(r.map_50_95, Some(1.0));
        assert_eq!(r.miou, Some(1.0));
        assert_eq!(r.macro_precision, Some(1.0));
        assert_eq!(r.macro_recall, Some(1.0));
    }

    #[test]
    fn uniform_shift_fixture() {
        // boxes shifted by w/4 have IoU (w - w/4)/(w + w/4) = 0.6 exactly
        let mut preds = BTreeMap::new();
        let mut gts = BTreeMap::new();
        for i in 0..3 {
            let id = format!("img_{i}");
            let gt_boxes: Vec<BBox> = (0..3)
                .map(|k| bx(100.0 * k as f64, 0.0, 100.0 * k as f64 + 8.0, 8.0, k as u32, 1.0))
                .collect();
            let pred_boxes: Vec<BBox> = gt_boxes
                .iter()
                .map(|b| BBox {
                    x_min: b.x_min + 2.0,
                    x_max: b.x_max + 2.0,
                    ..*b
                })
                .collect();
            preds.insert(id.clone(), det_set(&id, pred_boxes));
            gts.insert(id.clone(), GroundTruth::new(&id, gt_boxes));
        }
        let r = evaluate(&preds, &gts, &EvalConfig::default()).unwrap();
        assert_eq!(r.map_50, Some(1.0));
        assert_eq!(r.map_75, Some(0.0));
        let miou = r.miou.unwrap();
        assert!((miou - 0.6).abs() < 1e-9, "miou {miou}");
    }

    #[test]
    fn empty_predictions_conventions() {
        let gts_boxes = vec![bx(0.0, 0.0, 10.0, 10.0, 0, 1.0)];
        let (p, g) = one_image(vec![], gts_boxes);
        let r = evaluate(&p, &g, &EvalConfig::default()).unwrap();
        assert_eq!(r.macro_recall, Some(0.0));
        assert_eq!(r.map_50, Some(0.0));
        assert_eq!(r.macro_precision, None);
        assert_eq!(r.miou, None);
    }

    #[test]
    fn unknown_image_id_errors_with_offenders() {
        let mut preds = BTreeMap::new();
        preds.insert("ghost".to_string(), det_set("ghost", vec![]));
        let mut gts = BTreeMap::new();
        gts.insert(
            "real".to_string(),
            GroundTruth::new("real", vec![bx(0.0, 0.0, 1.0, 1.0, 0, 1.0)]),
        );
        match evaluate(&preds, &gts, &EvalConfig::default()) {
            Err(Error::UnknownImageIds(ids)) => assert_eq!(ids, vec!["ghost".to_string()]),
            other => panic!("expected UnknownImageIds, got {other:?}"),
        }
    }

    #[test]
    fn ap_depends_only_on_ranking() {
        let gts = vec![
            bx(0.0, 0.0, 10.0, 10.0, 0, 1.0),
            bx(50.0, 0.0, 60.0, 10.0, 0, 1.0),
        ];
        let preds = vec![
            gts[0].with_confidence(0.9),
            bx(200.0, 0.0, 210.0, 10.0, 0, 0.7),
            gts[1].with_confidence(0.5),
        ];
        let (p1, g) = one_image(preds.clone(), gts.clone());
        // strictly monotone transform of confidences
        let squeezed: Vec<BBox> = preds
            .iter()
            .map(|b| b.with_confidence(0.1 + 0.5 * b.confidence))
            .collect();
        let (p2, _) = one_image(squeezed, gts);
        let a1 = average_precision(&p1, &g, 0, 0.5).unwrap();
        let a2 = average_precision(&p2, &g, 0, 0.5).unwrap();
        assert_eq!(a1, a2);
    }

    #[test]
    fn best_match_miou_ignores_threshold() {
        let gts = vec![bx(0.0, 0.0, 10.0, 10.0, 0, 1.0)];
        // IoU 0.25 with GT: too low for TpAtHalf, counted by BestMatch
        let preds = vec![bx(0.0, 0.0, 10.0, 2.5, 0, 0.9)];
        let (p, g) = one_image(preds, gts);
        let mut cfg = EvalConfig::default();
        assert_eq!(evaluate(&p, &g, &cfg).unwrap().miou, None);
        cfg.miou_mode = MiouMode::BestMatch;
        let miou = evaluate(&p, &g, &cfg).unwrap().miou.unwrap();
        assert!((miou - 0.25).abs() < 1e-12);
    }

    #[test]
    fn max_dets_caps_per_image() {
        let gts = vec![bx(0.0, 0.0, 10.0, 10.0, 0, 1.0)];
        let preds = vec![
            bx(300.0, 0.0, 310.0, 10.0, 0, 0.9), // kept (highest conf), FP
            gts[0].with_confidence(0.5),         // dropped by the cap
        ];
        let (p, g) = one_image(preds, gts);
        let cfg = EvalConfig {
            max_dets: Some(1),
            ..EvalConfig::default()
        };
        let r = evaluate(&p, &g, &cfg).unwrap();
        assert_eq!(r.map_50, Some(0.0));
    }
}
