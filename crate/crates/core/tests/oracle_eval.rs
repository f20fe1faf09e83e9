//! Average precision against an independent brute-force PR-curve
//! computation, plus the metric invariants.
//!
//! The brute-force side codes the documented conventions directly: plain
//! nested-loop greedy matching and, for every one of the 101 recall points,
//! a full scan over all ranks for the best precision at recall >= r.

use std::collections::BTreeMap;

use detfuse::eval::{average_precision, evaluate, EvalConfig, GroundTruth};
use detfuse::fusion::DetectionSet;
use detfuse::geometry::{iou, BBox, ImageMeta};
use detfuse::rng::rng_from_seed;
use rand::Rng;

const TOL: f64 = 1e-9;

type Instance = (
    BTreeMap<String, DetectionSet>,
    BTreeMap<String, GroundTruth>,
);

/// Greedy matching flags, coded independently (quadratic, no early exits).
fn brute_match_flags(preds: &[BBox], gts: &[BBox], thr: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .confidence
            .partial_cmp(&preds[a].confidence)
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut taken = vec![false; gts.len()];
    let mut flags = vec![false; preds.len()];
    for &pi in &order {
        let mut best_gi = None;
        let mut best_iou = -1.0;
        for gi in 0..gts.len() {
            if taken[gi] || gts[gi].class_id != preds[pi].class_id {
                continue;
            }
            let ov = iou(&preds[pi], &gts[gi]);
            if ov >= thr && ov > best_iou {
                best_iou = ov;
                best_gi = Some(gi);
            }
        }
        if let Some(gi) = best_gi {
            taken[gi] = true;
            flags[pi] = true;
        }
    }
    flags
}

fn brute_force_ap(instance: &Instance, class_id: u32, thr: f64) -> Option<f64> {
    let (preds, gts) = instance;
    let npos: usize = gts
        .values()
        .flat_map(|g| &g.boxes)
        .filter(|b| b.class_id == class_id)
        .count();
    if npos == 0 {
        return None;
    }

    // global ranking: (confidence desc, image id asc, pred index asc)
    let mut ranked: Vec<(f64, String, usize, bool)> = Vec::new();
    for (id, set) in preds {
        let flags = brute_match_flags(&set.boxes, &gts[id].boxes, thr);
        for (pi, b) in set.boxes.iter().enumerate() {
            if b.class_id == class_id {
                ranked.push((b.confidence, id.clone(), pi, flags[pi]));
            }
        }
    }
    ranked.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut precision = Vec::new();
    let mut recall = Vec::new();
    let mut tp = 0.0;
    for (rank, r) in ranked.iter().enumerate() {
        if r.3 {
            tp += 1.0;
        }
        precision.push(tp / (rank + 1) as f64);
        recall.push(tp / npos as f64);
    }

    let mut sum = 0.0;
    for i in 0..=100 {
        let r = i as f64 / 100.0;
        let mut best = 0.0f64;
        for k in 0..precision.len() {
            if recall[k] >= r && precision[k] > best {
                best = precision[k];
            }
        }
        sum += best;
    }
    Some(sum / 101.0)
}

fn random_instance(seed: u64) -> Instance {
    let mut rng = rng_from_seed(seed);
    let n_images = rng.random_range(1..=4usize);
    let mut preds = BTreeMap::new();
    let mut gts = BTreeMap::new();
    fn random_boxes(rng: &mut impl Rng, n: usize, gt: bool) -> Vec<BBox> {
        (0..n)
            .map(|_| {
                let x = rng.random_range(0.0..30.0f64).floor();
                let y = rng.random_range(0.0..30.0f64).floor();
                let w = rng.random_range(4.0..16.0f64).floor();
                let h = rng.random_range(4.0..16.0f64).floor();
                BBox {
                    x_min: x,
                    y_min: y,
                    x_max: x + w,
                    y_max: y + h,
                    class_id: rng.random_range(0..3u32),
                    confidence: if gt { 1.0 } else { rng.random::<f64>() },
                }
            })
            .collect()
    }
    for i in 0..n_images {
        let id = format!("img_{i}");
        let n_gt = rng.random_range(0..=5usize);
        let n_pred = rng.random_range(0..=5usize);
        let gt_boxes = random_boxes(&mut rng, n_gt, true);
        let mut pred_boxes = random_boxes(&mut rng, n_pred, false);
        // bias some predictions toward actual ground truth so matches happen
        for b in pred_boxes.iter_mut() {
            if !gt_boxes.is_empty() && rng.random_bool(0.5) {
                let target = gt_boxes[rng.random_range(0..gt_boxes.len())];
                let dx = rng.random_range(-3.0..3.0f64).round();
                let dy = rng.random_range(-3.0..3.0f64).round();
                *b = BBox {
                    x_min: target.x_min + dx,
                    y_min: target.y_min + dy,
                    x_max: target.x_max + dx,
                    y_max: target.y_max + dy,
                    class_id: target.class_id,
                    confidence: b.confidence,
                };
            }
        }
        preds.insert(
            id.clone(),
            DetectionSet::new(&id, "m", ImageMeta::new(&id, 64, 64).unwrap(), pred_boxes)
                .unwrap(),
        );
        gts.insert(id.clone(), GroundTruth::new(&id, gt_boxes));
    }
    (preds, gts)
}

#[test]
fn ap_matches_brute_force_on_200_random_instances() {
    let mut compared = 0usize;
    for seed in 0..200u64 {
        let instance = random_instance(seed);
        for class_id in 0..3u32 {
            for thr in [0.3, 0.5, 0.75] {
                let got = average_precision(&instance.0, &instance.1, class_id, thr).unwrap();
                let want = brute_force_ap(&instance, class_id, thr);
                match (got, want) {
                    (None, None) => {}
                    (Some(g), Some(w)) => {
                        assert!(
                            (g - w).abs() <= TOL,
                            "instance {seed} class {class_id} thr {thr}: {g} vs {w}"
                        );
                        compared += 1;
                    }
                    other => {
                        panic!("instance {seed} class {class_id} thr {thr}: {other:?}")
                    }
                }
            }
        }
    }
    assert!(compared > 300, "too few informative comparisons: {compared}");
}

#[test]
fn removing_a_false_positive_never_decreases_ap() {
    for seed in 0..100u64 {
        let (preds, gts) = random_instance(seed);
        for thr in [0.5] {
            // label each prediction with the brute-force matcher
            for (id, set) in &preds {
                let flags = brute_match_flags(&set.boxes, &gts[id].boxes, thr);
                for (pi, is_tp) in flags.iter().enumerate() {
                    if *is_tp {
                        continue;
                    }
                    let class_id = set.boxes[pi].class_id;
                    let before = average_precision(&preds, &gts, class_id, thr).unwrap();
                    let mut trimmed = preds.clone();
                    trimmed.get_mut(id).unwrap().boxes.remove(pi);
                    let after = average_precision(&trimmed, &gts, class_id, thr).unwrap();
                    match (before, after) {
                        (Some(b), Some(a)) => assert!(
                            a >= b - 1e-12,
                            "instance {seed} image {id} pred {pi}: AP {b} -> {a}"
                        ),
                        (None, None) => {}
                        other => panic!("unexpected {other:?}"),
                    }
                }
            }
        }
    }
}

#[test]
fn removing_a_true_positive_never_increases_recall() {
    let recall_of = |preds: &BTreeMap<String, DetectionSet>,
                     gts: &BTreeMap<String, GroundTruth>,
                     class_id: u32| {
        let mut tp = 0usize;
        let mut npos = 0usize;
        for (id, set) in preds {
            let flags = brute_match_flags(&set.boxes, &gts[id].boxes, 0.5);
            tp += set
                .boxes
                .iter()
                .zip(&flags)
                .filter(|(b, f)| **f && b.class_id == class_id)
                .count();
        }
        for g in gts.values() {
            npos += g.boxes.iter().filter(|b| b.class_id == class_id).count();
        }
        (tp, npos)
    };

    for seed in 0..100u64 {
        let (preds, gts) = random_instance(seed);
        for (id, set) in &preds {
            let flags = brute_match_flags(&set.boxes, &gts[id].boxes, 0.5);
            for (pi, is_tp) in flags.iter().enumerate() {
                if !*is_tp {
                    continue;
                }
                let class_id = set.boxes[pi].class_id;
                let (tp_before, npos) = recall_of(&preds, &gts, class_id);
                let mut trimmed = preds.clone();
                trimmed.get_mut(id).unwrap().boxes.remove(pi);
                let (tp_after, _) = recall_of(&trimmed, &gts, class_id);
                assert!(npos > 0);
                assert!(
                    tp_after <= tp_before,
                    "instance {seed}: removing a TP raised recall"
                );
            }
        }
    }
}

#[test]
fn map_50_95_is_the_mean_of_per_threshold_maps() {
    for seed in 0..50u64 {
        let (preds, gts) = random_instance(seed);
        if gts.values().all(|g| g.boxes.is_empty()) {
            continue;
        }
        let report = evaluate(&preds, &gts, &EvalConfig::default()).unwrap();
        let values: Vec<f64> = report.map_per_threshold.iter().flatten().copied().collect();
        if values.is_empty() {
            assert_eq!(report.map_50_95, None);
            continue;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let got = report.map_50_95.unwrap();
        assert!(
            (got - mean).abs() <= 1e-12,
            "instance {seed}: {got} vs mean {mean}"
        );
    }
}
