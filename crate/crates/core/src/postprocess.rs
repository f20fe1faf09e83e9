//! Post-prediction filtering: per-class confidence thresholds and the
//! scale/area-consistency discard rule.
//!
//! Both filters keep a box only under a strict inequality, are idempotent,
//! only ever remove boxes (order preserved, coordinates untouched) and
//! commute with each other.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::DetectionSet;
use crate::geometry::area_fraction;

/// Per-class confidence cutoffs; classes not listed use the default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassThresholds {
    #[serde(default)]
    pub per_class: BTreeMap<u32, f64>,
    pub default: f64,
}

impl ClassThresholds {
    pub fn uniform(default: f64) -> Self {
        ClassThresholds {
            per_class: BTreeMap::new(),
            default,
        }
    }

    pub fn threshold_for(&self, class_id: u32) -> f64 {
        self.per_class.get(&class_id).copied().unwrap_or(self.default)
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.per_class.values().chain(std::iter::once(&self.default));
        for t in all {
            if !(0.0..=1.0).contains(t) {
                return Err(Error::InvalidParam(format!(
                    "confidence threshold {t} outside [0,1]"
                )));
            }
        }
        Ok(())
    }
}

/// Area-consistency rule for frames whose scale tag falls in `(scale_min,
/// scale_max]`: boxes with an image-area fraction above `max_area_fraction`
/// or below `min_area_fraction` are discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaRule {
    pub scale_min: f64,
    /// Upper bound of the scale range; `None` means unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_max: Option<f64>,
    pub max_area_fraction: f64,
    #[serde(default)]
    pub min_area_fraction: f64,
}

impl AreaRule {
    pub fn matches(&self, scale_tag: f64) -> bool {
        scale_tag > self.scale_min && self.scale_max.is_none_or(|m| scale_tag <= m)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.max_area_fraction;
        if m.is_nan() || m <= 0.0 || m > 1.0 {
            return Err(Error::InvalidParam(format!(
                "max_area_fraction must be in (0,1], got {}",
                self.max_area_fraction
            )));
        }
        if !(0.0..1.0).contains(&self.min_area_fraction) {
            return Err(Error::InvalidParam(format!(
                "min_area_fraction must be in [0,1), got {}",
                self.min_area_fraction
            )));
        }
        if self.min_area_fraction >= self.max_area_fraction {
            return Err(Error::InvalidParam(
                "min_area_fraction must be < max_area_fraction".into(),
            ));
        }
        Ok(())
    }
}

/// Operational defaults: large boxes are suspect on up-scaled renditions,
/// tiny boxes on down-scaled ones.
pub fn default_area_rules() -> Vec<AreaRule> {
    vec![
        AreaRule {
            scale_min: 1.5,
            scale_max: None,
            max_area_fraction: 0.5,
            min_area_fraction: 0.0,
        },
        AreaRule {
            scale_min: 0.0,
            scale_max: Some(0.75),
            max_area_fraction: 1.0,
            min_area_fraction: 0.0005,
        },
    ]
}

/// Keep boxes whose confidence is strictly above their class threshold.
pub fn filter_confidence(set: &DetectionSet, thr: &ClassThresholds) -> DetectionSet {
    let boxes = set
        .boxes
        .iter()
        .filter(|b| b.confidence > thr.threshold_for(b.class_id))
        .copied()
        .collect();
    DetectionSet {
        image_id: set.image_id.clone(),
        source_id: set.source_id.clone(),
        frame: set.frame.clone(),
        boxes,
    }
}

/// Outcome of [`filter_area`]: the filtered set, plus a warning when no rule
/// matched the frame's scale tag (the set passes through unchanged then).
#[derive(Debug, Clone)]
pub struct AreaFiltered {
    pub set: DetectionSet,
    pub warning: Option<String>,
}

/// Apply the first rule matching the frame's scale tag (rules are evaluated
/// in order). An empty rule list is the identity; a frame without a scale
/// tag is an error unless the rule list is empty.
pub fn filter_area(set: &DetectionSet, rules: &[AreaRule]) -> Result<AreaFiltered> {
    if rules.is_empty() {
        return Ok(AreaFiltered {
            set: set.clone(),
            warning: None,
        });
    }
    for r in rules {
        r.validate()?;
    }
    let Some(tag) = set.frame.scale_tag else {
        return Err(Error::MissingScaleTag(format!(
            "{} / {}",
            set.image_id, set.source_id
        )));
    };
    let Some(rule) = rules.iter().find(|r| r.matches(tag)) else {
        return Ok(AreaFiltered {
            set: set.clone(),
            warning: Some(format!(
                "no area rule matches scale_tag {tag} of image {}",
                set.image_id
            )),
        });
    };

    let boxes = set
        .boxes
        .iter()
        .filter(|b| {
            let frac = area_fraction(b, &set.frame);
            frac <= rule.max_area_fraction && frac >= rule.min_area_fraction
        })
        .copied()
        .collect();
    Ok(AreaFiltered {
        set: DetectionSet {
            image_id: set.image_id.clone(),
            source_id: set.source_id.clone(),
            frame: set.frame.clone(),
            boxes,
        },
        warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BBox, ImageMeta};

    fn bx(class: u32, conf: f64) -> BBox {
        BBox::new(0.0, 0.0, 10.0, 10.0, class, conf).unwrap()
    }

    fn tagged_set(scale: f64, boxes: Vec<BBox>) -> DetectionSet {
        let frame = ImageMeta::new("img", 100, 100)
            .unwrap()
            .with_scale(scale)
            .unwrap();
        DetectionSet::new("img", "m", frame, boxes).unwrap()
    }

    #[test]
    fn zero_thresholds_only_drop_zero_confidence() {
        let set = tagged_set(1.0, vec![bx(0, 0.0), bx(1, 0.001), bx(2, 1.0)]);
        let out = filter_confidence(&set, &ClassThresholds::uniform(0.0));
        assert_eq!(out.boxes.len(), 2);
        assert!(out.boxes.iter().all(|b| b.confidence > 0.0));
    }

    #[test]
    fn unit_thresholds_empty_output() {
        let set = tagged_set(1.0, vec![bx(0, 1.0), bx(1, 0.99)]);
        let out = filter_confidence(&set, &ClassThresholds::uniform(1.0));
        assert!(out.boxes.is_empty());
    }

    #[test]
    fn per_class_threshold_beats_default() {
        let mut thr = ClassThresholds::uniform(0.5);
        thr.per_class.insert(0, 0.3);
        let set = tagged_set(1.0, vec![bx(0, 0.4), bx(1, 0.4)]);
        let out = filter_confidence(&set, &thr);
        assert_eq!(out.boxes.len(), 1);
        assert_eq!(out.boxes[0].class_id, 0);
    }

    #[test]
    fn area_rule_drops_large_boxes_on_large_scale() {
        let full = BBox::new(0.0, 0.0, 100.0, 100.0, 0, 0.9).unwrap();
        let small = BBox::new(0.0, 0.0, 10.0, 10.0, 0, 0.9).unwrap();
        let set = tagged_set(2.0, vec![full, small]);
        let rules = vec![AreaRule {
            scale_min: 1.5,
            scale_max: None,
            max_area_fraction: 0.5,
            min_area_fraction: 0.0,
        }];
        let out = filter_area(&set, &rules).unwrap();
        assert!(out.warning.is_none());
        assert_eq!(out.set.boxes, vec![small]);
    }

    #[test]
    fn empty_rules_are_identity() {
        let set = tagged_set(1.0, vec![bx(0, 0.9)]);
        let out = filter_area(&set, &[]).unwrap();
        assert_eq!(out.set.boxes, set.boxes);
        assert!(out.warning.is_none());
    }

    #[test]
    fn boundary_area_fraction_is_kept() {
        // box at exactly max_area_fraction survives (strict inequality drops)
        let half = BBox::new(0.0, 0.0, 100.0, 50.0, 0, 0.9).unwrap();
        let set = tagged_set(2.0, vec![half]);
        let rules = vec![AreaRule {
            scale_min: 1.5,
            scale_max: None,
            max_area_fraction: 0.5,
            min_area_fraction: 0.0,
        }];
        let out = filter_area(&set, &rules).unwrap();
        assert_eq!(out.set.boxes, vec![half]);
    }

    #[test]
    fn unmatched_scale_warns_and_passes_through() {
        let set = tagged_set(1.0, vec![bx(0, 0.9)]);
        let rules = vec![AreaRule {
            scale_min: 1.5,
            scale_max: None,
            max_area_fraction: 0.5,
            min_area_fraction: 0.0,
        }];
        let out = filter_area(&set, &rules).unwrap();
        assert!(out.warning.is_some());
        assert_eq!(out.set.boxes, set.boxes);
    }

    #[test]
    fn missing_scale_tag_is_an_error() {
        let frame = ImageMeta::new("img", 100, 100).unwrap();
        let set = DetectionSet::new("img", "m", frame, vec![bx(0, 0.9)]).unwrap();
        assert!(matches!(
            filter_area(&set, &default_area_rules()),
            Err(Error::MissingScaleTag(_))
        ));
    }

    #[test]
    fn filters_are_idempotent_and_commute_on_fixture() {
        let boxes = vec![
            BBox::new(0.0, 0.0, 100.0, 100.0, 0, 0.9).unwrap(),
            BBox::new(0.0, 0.0, 5.0, 5.0, 1, 0.2).unwrap(),
            BBox::new(10.0, 10.0, 40.0, 40.0, 2, 0.7).unwrap(),
        ];
        let set = tagged_set(2.0, boxes);
        let thr = ClassThresholds::uniform(0.5);
        let rules = default_area_rules();

        let conf_first = filter_area(&filter_confidence(&set, &thr), &rules).unwrap().set;
        let area_first = filter_confidence(&filter_area(&set, &rules).unwrap().set, &thr);
        assert_eq!(conf_first, area_first);

        let twice = filter_confidence(&filter_confidence(&set, &thr), &thr);
        assert_eq!(twice, filter_confidence(&set, &thr));
    }
}
