//! Report rendering: plain table, markdown, JSON and CSV.
//!
//! The headline row keeps the column order mAP(0.5), mAP(0.5:0.95), mIoU;
//! the header states which mIoU definition produced the numbers.

use super::EvalReport;

fn fmt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "n/a".to_string(),
    }
}

fn threshold_label(t: f64) -> String {
    format!("{t:.2}")
}

pub fn render_table(r: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("mIoU definition: {}\n", r.miou_definition));
    out.push_str(&format!(
        "{:>10} {:>14} {:>8}\n",
        "mAP(0.5)", "mAP(0.5:0.95)", "mIoU"
    ));
    out.push_str(&format!(
        "{:>10} {:>14} {:>8}\n",
        fmt(r.map_50),
        fmt(r.map_50_95),
        fmt(r.miou)
    ));
    out.push_str(&format!(
        "precision {}  recall {}  mAP(0.75) {}\n",
        fmt(r.macro_precision),
        fmt(r.macro_recall),
        fmt(r.map_75)
    ));
    out.push('\n');
    out.push_str(&format!(
        "{:>6} {:>6} {:>6} {:>9} {:>9} {:>9} {:>9}\n",
        "class", "gt", "pred", "AP(0.5)", "AP(0.75)", "P(0.5)", "R(0.5)"
    ));
    let idx = |wanted: f64| {
        r.iou_thresholds
            .iter()
            .position(|t| (t - wanted).abs() < 1e-9)
    };
    let (i50, i75) = (idx(0.5), idx(0.75));
    for c in &r.per_class {
        let pick = |v: &Vec<Option<f64>>, i: Option<usize>| i.and_then(|i| v[i]);
        out.push_str(&format!(
            "{:>6} {:>6} {:>6} {:>9} {:>9} {:>9} {:>9}\n",
            c.class_id,
            c.gt_count,
            c.pred_count,
            fmt(pick(&c.ap, i50)),
            fmt(pick(&c.ap, i75)),
            fmt(pick(&c.precision, i50)),
            fmt(pick(&c.recall, i50)),
        ));
    }
    out
}

pub fn render_markdown(r: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str("# Evaluation report\n\n");
    out.push_str(&format!("mIoU definition: {}\n\n", r.miou_definition));
    out.push_str("| mAP(0.5) | mAP(0.5:0.95) | mIoU |\n|---|---|---|\n");
    out.push_str(&format!(
        "| {} | {} | {} |\n\n",
        fmt(r.map_50),
        fmt(r.map_50_95),
        fmt(r.miou)
    ));
    out.push_str(&format!(
        "Precision {} / Recall {} / mAP(0.75) {}\n\n",
        fmt(r.macro_precision),
        fmt(r.macro_recall),
        fmt(r.map_75)
    ));
    out.push_str("## Per-threshold mAP\n\n| IoU | mAP |\n|---|---|\n");
    for (t, v) in r.iou_thresholds.iter().zip(&r.map_per_threshold) {
        out.push_str(&format!("| {} | {} |\n", threshold_label(*t), fmt(*v)));
    }
    out.push_str("\n## Per-class metrics\n\n");
    out.push_str("| class | gt | pred | AP(0.5) | AP(0.75) | P(0.5) | R(0.5) |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    let idx = |wanted: f64| {
        r.iou_thresholds
            .iter()
            .position(|t| (t - wanted).abs() < 1e-9)
    };
    let (i50, i75) = (idx(0.5), idx(0.75));
    for c in &r.per_class {
        let pick = |v: &Vec<Option<f64>>, i: Option<usize>| i.and_then(|i| v[i]);
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} |\n",
            c.class_id,
            c.gt_count,
            c.pred_count,
            fmt(pick(&c.ap, i50)),
            fmt(pick(&c.ap, i75)),
            fmt(pick(&c.precision, i50)),
            fmt(pick(&c.recall, i50)),
        ));
    }
    out
}

pub fn render_json(r: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}

pub fn render_csv(r: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str("scope,class,iou,metric,value\n");
    let aggr = [
        ("map_50", r.map_50),
        ("map_75", r.map_75),
        ("map_50_95", r.map_50_95),
        ("miou", r.miou),
        ("macro_precision", r.macro_precision),
        ("macro_recall", r.macro_recall),
    ];
    for (name, val) in aggr {
        out.push_str(&format!("aggregate,,,{},{}\n", name, fmt(val)));
    }
    for (t, v) in r.iou_thresholds.iter().zip(&r.map_per_threshold) {
        out.push_str(&format!(
            "threshold,,{},map,{}\n",
            threshold_label(*t),
            fmt(*v)
        ));
    }
    for c in &r.per_class {
        for (i, t) in r.iou_thresholds.iter().enumerate() {
            let label = threshold_label(*t);
            out.push_str(&format!(
                "class,{},{},ap,{}\n",
                c.class_id,
                label,
                fmt(c.ap[i])
            ));
            out.push_str(&format!(
                "class,{},{},precision,{}\n",
                c.class_id,
                label,
                fmt(c.precision[i])
            ));
            out.push_str(&format!(
                "class,{},{},recall,{}\n",
                c.class_id,
                label,
                fmt(c.recall[i])
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{evaluate, EvalConfig, GroundTruth};
    use super::*;
    use crate::fusion::DetectionSet;
    use crate::geometry::{BBox, ImageMeta};
    use std::collections::BTreeMap;

    fn tiny_report() -> EvalReport {
        let boxes = vec![BBox::new(0.0, 0.0, 10.0, 10.0, 0, 1.0).unwrap()];
        let mut preds = BTreeMap::new();
        preds.insert(
            "i".to_string(),
            DetectionSet::new("i", "m", ImageMeta::new("i", 100, 100).unwrap(), boxes.clone())
                .unwrap(),
        );
        let mut gts = BTreeMap::new();
        gts.insert("i".to_string(), GroundTruth::new("i", boxes));
        evaluate(&preds, &gts, &EvalConfig::default()).unwrap()
    }

    #[test]
    fn table_leads_with_headline_columns() {
        let text = render_table(&tiny_report());
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("mIoU definition"));
        let header = lines.next().unwrap();
        let a = header.find("mAP(0.5)").unwrap();
        let b = header.find("mAP(0.5:0.95)").unwrap();
        let c = header.find("mIoU").unwrap();
        assert!(a < b && b < c);
        assert!(lines.next().unwrap().contains("1.0000"));
    }

    #[test]
    fn json_round_trips() {
        let r = tiny_report();
        let parsed: EvalReport = serde_json::from_str(&render_json(&r)).unwrap();
        assert_eq!(parsed, r);
    }

    #[test]
    fn csv_has_aggregate_rows() {
        let text = render_csv(&tiny_report());
        assert!(text.contains("aggregate,,,map_50,1.0000"));
        assert!(text.contains("aggregate,,,miou,1.0000"));
    }
}
