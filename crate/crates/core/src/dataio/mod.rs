//! Interchange formats, dataset splitting and the image codec boundary.
//!
//! The JSON schemas (annotations, predictions, split files) are versioned
//! with a `"schema": "detfuse/1"` field and documented in `docs/formats.md`.
//! Boxes travel as `[x, y, w, h]` by default (the COCO convention); a
//! top-level `"bbox_format": "xyxy"` switches a file to corner form.
//! Everything is converted to corner form at this boundary.

mod csvio;
mod formats;
mod imageio;

pub use csvio::{load_ground_truth_csv, load_predictions_csv};
pub use formats::{
    load_annotations, load_predictions, load_predictions_with, predictions_to_json,
    save_predictions, PredictionsFile,
};
pub use imageio::{list_images, load_raster, save_raster};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ImageMeta;
use crate::rng::{derive_seed, rng_from_seed};

/// Version tag written into every interchange file.
pub const SCHEMA_VERSION: &str = "detfuse/1";

/// Maps between original (possibly sparse) category ids and the dense
/// `[0, C)` class ids used everywhere inside the toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMap {
    names: Vec<String>,
    orig_ids: Vec<i64>,
}

impl ClassMap {
    /// Build from (original id, name) pairs; dense ids follow ascending
    /// original id.
    pub fn new(mut categories: Vec<(i64, String)>) -> Result<Self> {
        categories.sort_by_key(|(id, _)| *id);
        for pair in categories.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidParam(format!(
                    "duplicate category id {}",
                    pair[0].0
                )));
            }
        }
        let (orig_ids, names) = categories.into_iter().unzip();
        Ok(ClassMap { names, orig_ids })
    }

    /// Classes named `class_0 .. class_{n-1}`, original ids equal to dense.
    pub fn from_count(n: usize) -> Self {
        ClassMap {
            names: (0..n).map(|i| format!("class_{i}")).collect(),
            orig_ids: (0..n as i64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, class_id: u32) -> Option<&str> {
        self.names.get(class_id as usize).map(String::as_str)
    }

    pub fn dense(&self, orig_id: i64) -> Option<u32> {
        self.orig_ids
            .binary_search(&orig_id)
            .ok()
            .map(|i| i as u32)
    }

    pub fn original(&self, class_id: u32) -> Option<i64> {
        self.orig_ids.get(class_id as usize).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// One image row of the dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_name: Option<String>,
    pub width: u32,
    pub height: u32,
    /// Ground-truth boxes per class in this image.
    #[serde(default)]
    pub class_counts: BTreeMap<u32, usize>,
}

impl ManifestEntry {
    /// Stratum for splitting: the class with most boxes, ties to the lowest
    /// class id; `None` for unlabeled images.
    pub fn majority_class(&self) -> Option<u32> {
        let mut best: Option<(u32, usize)> = None;
        for (&class, &count) in &self.class_counts {
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((class, count));
            }
        }
        best.map(|(class, _)| class)
    }

    pub fn frame(&self) -> ImageMeta {
        ImageMeta {
            image_id: self.image_id.clone(),
            width: self.width,
            height: self.height,
            scale_tag: None,
        }
    }
}

/// Image index plus the class space of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub classes: ClassMap,
}

impl DatasetManifest {
    pub fn entry(&self, image_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.image_id == image_id)
    }

    /// Check that every image file resolves under `root`.
    pub fn verify_paths(&self, root: &Path) -> Result<()> {
        for e in &self.entries {
            let Some(name) = &e.file_name else {
                return Err(Error::InvalidParam(format!(
                    "image {} has no file name in the manifest",
                    e.image_id
                )));
            };
            let p = root.join(name);
            if !p.is_file() {
                return Err(Error::InvalidParam(format!(
                    "image file not found: {}",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

/// How many validation images to draw per class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSize {
    PerClass(usize),
    Ratio(f64),
}

impl Default for SplitSize {
    fn default() -> Self {
        SplitSize::PerClass(200)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(default)]
    pub size: SplitSize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub train: Vec<String>,
    pub val: Vec<String>,
}

/// Stratified train/validation split.
///
/// Images are grouped by majority class; each stratum is shuffled with its
/// own stream derived from (seed, class), and the first `count` ids become
/// validation. Unlabeled images always land in train. Output id lists are
/// sorted, so the result is a deterministic partition.
pub fn split(manifest: &DatasetManifest, spec: &SplitSpec) -> Result<SplitResult> {
    if let SplitSize::Ratio(r) = spec.size {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidParam(format!(
                "split ratio must be in [0,1], got {r}"
            )));
        }
    }

    let mut strata: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    let mut train: Vec<String> = Vec::new();
    for e in &manifest.entries {
        match e.majority_class() {
            Some(c) => strata.entry(c).or_default().push(e.image_id.clone()),
            None => train.push(e.image_id.clone()),
        }
    }

    let mut val: Vec<String> = Vec::new();
    for (class, mut ids) in strata {
        ids.sort();
        let count = match spec.size {
            SplitSize::PerClass(n) => n,
            SplitSize::Ratio(r) => (r * ids.len() as f64).round() as usize,
        };
        if count > ids.len() {
            let name = manifest
                .classes
                .name(class)
                .map(str::to_owned)
                .unwrap_or_else(|| format!("class_{class}"));
            return Err(Error::InsufficientClass {
                class: name,
                have: ids.len(),
                need: count,
            });
        }
        let mut rng = rng_from_seed(derive_seed(spec.seed, class as u64, "split"));
        // Fisher-Yates, pinned here so splits replay across versions
        for i in (1..ids.len()).rev() {
            let j = rand::Rng::random_range(&mut rng, 0..=i);
            ids.swap(i, j);
        }
        val.extend(ids.drain(..count));
        train.extend(ids);
    }

    train.sort();
    val.sort();
    Ok(SplitResult { train, val })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(classes: usize, per_class: usize) -> DatasetManifest {
        let mut entries = Vec::new();
        for c in 0..classes {
            for i in 0..per_class {
                let mut counts = BTreeMap::new();
                counts.insert(c as u32, 1);
                entries.push(ManifestEntry {
                    image_id: format!("c{c}_{i:04}"),
                    file_name: None,
                    width: 100,
                    height: 100,
                    class_counts: counts,
                });
            }
        }
        DatasetManifest {
            entries,
            classes: ClassMap::from_count(classes),
        }
    }

    #[test]
    fn paper_profile_counts() {
        // 11 classes x 1000 images, 200 validation each -> 2200 / 8800
        let m = manifest(11, 1000);
        let r = split(
            &m,
            &SplitSpec {
                size: SplitSize::PerClass(200),
                seed: 7,
            },
        )
        .unwrap();
        assert_eq!(r.val.len(), 2200);
        assert_eq!(r.train.len(), 8800);
    }

    #[test]
    fn ratio_one_fifth_matches_count() {
        let m = manifest(3, 50);
        let r = split(
            &m,
            &SplitSpec {
                size: SplitSize::Ratio(0.2),
                seed: 7,
            },
        )
        .unwrap();
        assert_eq!(r.val.len(), 30);
    }

    #[test]
    fn zero_count_gives_empty_val() {
        let m = manifest(2, 10);
        let r = split(
            &m,
            &SplitSpec {
                size: SplitSize::PerClass(0),
                seed: 7,
            },
        )
        .unwrap();
        assert!(r.val.is_empty());
        assert_eq!(r.train.len(), 20);
    }

    #[test]
    fn split_is_a_partition() {
        let m = manifest(4, 25);
        let r = split(
            &m,
            &SplitSpec {
                size: SplitSize::PerClass(5),
                seed: 99,
            },
        )
        .unwrap();
        let mut all: Vec<String> = r.train.iter().chain(&r.val).cloned().collect();
        all.sort();
        let mut expect: Vec<String> = m.entries.iter().map(|e| e.image_id.clone()).collect();
        expect.sort();
        assert_eq!(all, expect);
        assert!(r.train.iter().all(|id| !r.val.contains(id)));
        // exact per-class counts
        for c in 0..4u32 {
            let n = r
                .val
                .iter()
                .filter(|id| id.starts_with(&format!("c{c}_")))
                .count();
            assert_eq!(n, 5);
        }
    }

    #[test]
    fn same_seed_same_split_different_seed_differs() {
        let m = manifest(2, 400);
        let spec = |seed| SplitSpec {
            size: SplitSize::PerClass(100),
            seed,
        };
        let a = split(&m, &spec(1)).unwrap();
        let b = split(&m, &spec(1)).unwrap();
        let c = split(&m, &spec(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn insufficient_class_names_the_class() {
        let m = manifest(2, 10);
        match split(
            &m,
            &SplitSpec {
                size: SplitSize::PerClass(11),
                seed: 7,
            },
        ) {
            Err(Error::InsufficientClass { class, have, need }) => {
                assert_eq!(class, "class_0");
                assert_eq!((have, need), (10, 11));
            }
            other => panic!("expected InsufficientClass, got {other:?}"),
        }
    }

    #[test]
    fn unlabeled_images_stay_in_train() {
        let mut m = manifest(1, 10);
        m.entries.push(ManifestEntry {
            image_id: "bare".into(),
            file_name: None,
            width: 10,
            height: 10,
            class_counts: BTreeMap::new(),
        });
        let r = split(
            &m,
            &SplitSpec {
                size: SplitSize::PerClass(10),
                seed: 7,
            },
        )
        .unwrap();
        assert!(r.train.contains(&"bare".to_string()));
    }

    #[test]
    fn majority_class_breaks_ties_low() {
        let mut counts = BTreeMap::new();
        counts.insert(3u32, 2usize);
        counts.insert(1u32, 2usize);
        let e = ManifestEntry {
            image_id: "x".into(),
            file_name: None,
            width: 1,
            height: 1,
            class_counts: counts,
        };
        assert_eq!(e.majority_class(), Some(1));
    }
}
