//! The detfuse/1 JSON schemas: annotations and prediction files.
//!
//! Annotation files are COCO-shaped (`images[]`, `annotations[]`,
//! `categories[]`); prediction files carry `images[]`, optional
//! `categories[]`, a per-file `source_id` and a flat `results[]` list.
//! Image ids may be JSON strings or integers; they are canonicalized to
//! strings. Box interchange defaults to `[x, y, w, h]`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::fusion::DetectionSet;
use crate::geometry::{BBox, ImageMeta};

use super::{ClassMap, DatasetManifest, ManifestEntry, SCHEMA_VERSION};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum IdValue {
    Int(i64),
    Str(String),
}

impl IdValue {
    fn canonical(&self) -> String {
        match self {
            IdValue::Int(v) => v.to_string(),
            IdValue::Str(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BboxFormat {
    #[default]
    Xywh,
    Xyxy,
}

impl BboxFormat {
    /// Convert an interchange bbox to corner form; `Err(reason)` for
    /// negative extents.
    fn to_corners(self, b: [f64; 4]) -> std::result::Result<[f64; 4], String> {
        match self {
            BboxFormat::Xywh => {
                if b[2] < 0.0 || b[3] < 0.0 {
                    return Err(format!("negative extent {}x{}", b[2], b[3]));
                }
                Ok([b[0], b[1], b[0] + b[2], b[1] + b[3]])
            }
            BboxFormat::Xyxy => {
                if b[2] < b[0] || b[3] < b[1] {
                    return Err("corners out of order".into());
                }
                Ok(b)
            }
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawImage {
    id: IdValue,
    #[serde(default)]
    file_name: Option<String>,
    width: u32,
    height: u32,
    #[serde(default)]
    scale_tag: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RawCategory {
    id: i64,
    name: String,
}

#[derive(Debug, Deserialize)]
struct RawAnnotation {
    image_id: IdValue,
    category_id: i64,
    bbox: [f64; 4],
}

#[derive(Debug, Deserialize)]
struct RawDataset {
    #[serde(default)]
    schema: Option<String>,
    #[serde(default)]
    bbox_format: BboxFormat,
    images: Vec<RawImage>,
    #[serde(default)]
    annotations: Vec<RawAnnotation>,
    categories: Vec<RawCategory>,
}

fn schema_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

fn check_schema(path: &Path, schema: &Option<String>) -> Result<()> {
    if let Some(s) = schema {
        if !s.starts_with("detfuse/") {
            return Err(schema_err(path, format!("unsupported schema {s:?}")));
        }
    }
    Ok(())
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| schema_err(path, e.to_string()))
}

/// Load a ground-truth annotation file.
pub fn load_annotations(
    path: impl AsRef<Path>,
) -> Result<(DatasetManifest, BTreeMap<String, GroundTruth>)> {
    let path = path.as_ref();
    let raw: RawDataset = parse_json(path)?;
    check_schema(path, &raw.schema)?;

    let classes = ClassMap::new(
        raw.categories
            .into_iter()
            .map(|c| (c.id, c.name))
            .collect(),
    )?;

    let mut entries: Vec<ManifestEntry> = Vec::with_capacity(raw.images.len());
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for img in raw.images {
        let id = img.id.canonical();
        if index.contains_key(&id) {
            return Err(Error::DuplicateImageId(id));
        }
        if img.width == 0 || img.height == 0 {
            return Err(schema_err(path, format!("image {id} has zero dimensions")));
        }
        index.insert(id.clone(), entries.len());
        entries.push(ManifestEntry {
            image_id: id,
            file_name: img.file_name,
            width: img.width,
            height: img.height,
            class_counts: BTreeMap::new(),
        });
    }

    let mut gts: BTreeMap<String, Vec<BBox>> = index
        .keys()
        .map(|id| (id.clone(), Vec::new()))
        .collect();
    let mut rejected: Vec<String> = Vec::new();
    for (record, ann) in raw.annotations.into_iter().enumerate() {
        let image_id = ann.image_id.canonical();
        let Some(&entry_idx) = index.get(&image_id) else {
            return Err(schema_err(
                path,
                format!("annotation #{record}: unknown image id {image_id:?}"),
            ));
        };
        let Some(class_id) = classes.dense(ann.category_id) else {
            return Err(Error::UnknownCategory {
                id: ann.category_id,
                context: format!("{}: annotation #{record}", path.display()),
            });
        };
        match raw.bbox_format.to_corners(ann.bbox) {
            Ok([x0, y0, x1, y1]) => {
                gts.get_mut(&image_id)
                    .expect("initialized above")
                    .push(BBox {
                        x_min: x0,
                        y_min: y0,
                        x_max: x1,
                        y_max: y1,
                        class_id,
                        confidence: 1.0,
                    });
                *entries[entry_idx].class_counts.entry(class_id).or_default() += 1;
            }
            Err(reason) => rejected.push(format!("annotation #{record}: {reason}")),
        }
    }
    if !rejected.is_empty() {
        return Err(Error::RejectedRecords {
            path: path.to_path_buf(),
            rejected,
        });
    }

    let gts = gts
        .into_iter()
        .map(|(id, boxes)| {
            let gt = GroundTruth {
                image_id: id.clone(),
                boxes,
            };
            (id, gt)
        })
        .collect();

    Ok((DatasetManifest { entries, classes }, gts))
}

#[derive(Debug, Serialize, Deserialize)]
struct RawResult {
    image_id: IdValue,
    category_id: i64,
    bbox: [f64; 4],
    score: f64,
}

#[derive(Debug, Deserialize)]
struct RawPredFile {
    #[serde(default)]
    schema: Option<String>,
    #[serde(default)]
    source_id: Option<String>,
    #[serde(default)]
    bbox_format: BboxFormat,
    images: Vec<RawImage>,
    #[serde(default)]
    categories: Option<Vec<RawCategory>>,
    #[serde(default)]
    results: Vec<RawResult>,
}

/// One prediction file: one source (model x scale) over many images.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionsFile {
    pub source_id: String,
    pub classes: ClassMap,
    pub sets: BTreeMap<String, DetectionSet>,
}

/// Load a prediction file, validating category ids against its own
/// `categories` section (which is required in this standalone form).
pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionsFile> {
    load_predictions_impl(path.as_ref(), None)
}

/// Load a prediction file, validating category ids against the given class
/// map (normally the ground truth's); the file's own `categories` section is
/// then optional.
pub fn load_predictions_with(path: impl AsRef<Path>, classes: &ClassMap) -> Result<PredictionsFile> {
    load_predictions_impl(path.as_ref(), Some(classes))
}

fn load_predictions_impl(path: &Path, external: Option<&ClassMap>) -> Result<PredictionsFile> {
    let raw: RawPredFile = parse_json(path)?;
    check_schema(path, &raw.schema)?;

    let classes = match (external, raw.categories) {
        (Some(map), _) => map.clone(),
        (None, Some(cats)) => {
            ClassMap::new(cats.into_iter().map(|c| (c.id, c.name)).collect())?
        }
        (None, None) => {
            return Err(schema_err(
                path,
                "prediction file has no categories section and no external class map was given",
            ))
        }
    };

    let source_id = raw.source_id.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "predictions".into())
    });

    let mut sets: BTreeMap<String, DetectionSet> = BTreeMap::new();
    for img in raw.images {
        let id = img.id.canonical();
        if sets.contains_key(&id) {
            return Err(Error::DuplicateImageId(id));
        }
        if img.width == 0 || img.height == 0 {
            return Err(schema_err(path, format!("image {id} has zero dimensions")));
        }
        let mut frame = ImageMeta {
            image_id: id.clone(),
            width: img.width,
            height: img.height,
            scale_tag: None,
        };
        if let Some(tag) = img.scale_tag {
            frame = frame.with_scale(tag)?;
        }
        sets.insert(
            id.clone(),
            DetectionSet {
                image_id: id,
                source_id: source_id.clone(),
                frame,
                boxes: Vec::new(),
            },
        );
    }

    for (record, r) in raw.results.into_iter().enumerate() {
        let image_id = r.image_id.canonical();
        let Some(set) = sets.get_mut(&image_id) else {
            return Err(schema_err(
                path,
                format!("result #{record}: unknown image id {image_id:?}"),
            ));
        };
        let Some(class_id) = classes.dense(r.category_id) else {
            return Err(Error::UnknownCategory {
                id: r.category_id,
                context: format!("{}: result #{record}", path.display()),
            });
        };
        if !(0.0..=1.0).contains(&r.score) || !r.score.is_finite() {
            return Err(schema_err(
                path,
                format!("result #{record}: score {} outside [0,1]", r.score),
            ));
        }
        let [x0, y0, x1, y1] = raw
            .bbox_format
            .to_corners(r.bbox)
            .map_err(|reason| schema_err(path, format!("result #{record}: {reason}")))?;
        set.boxes.push(BBox {
            x_min: x0,
            y_min: y0,
            x_max: x1,
            y_max: y1,
            class_id,
            confidence: r.score,
        });
    }

    Ok(PredictionsFile {
        source_id,
        classes,
        sets,
    })
}

#[derive(Serialize)]
struct OutImage<'a> {
    id: &'a str,
    width: u32,
    height: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale_tag: Option<f64>,
}

#[derive(Serialize)]
struct OutCategory<'a> {
    id: i64,
    name: &'a str,
}

#[derive(Serialize)]
struct OutPredFile<'a> {
    schema: &'a str,
    source_id: &'a str,
    bbox_format: BboxFormat,
    images: Vec<OutImage<'a>>,
    categories: Vec<OutCategory<'a>>,
    results: Vec<RawResult>,
}

/// Serialize a prediction file (always `[x, y, w, h]` boxes). Returns the
/// JSON text; callers decide how to put it on disk.
pub fn predictions_to_json(file: &PredictionsFile) -> Result<String> {
    let images: Vec<OutImage> = file
        .sets
        .values()
        .map(|s| OutImage {
            id: &s.image_id,
            width: s.frame.width,
            height: s.frame.height,
            scale_tag: s.frame.scale_tag,
        })
        .collect();
    let categories: Vec<OutCategory> = file
        .classes
        .names()
        .iter()
        .enumerate()
        .map(|(i, name)| OutCategory {
            id: file
                .classes
                .original(i as u32)
                .expect("dense ids are in range"),
            name,
        })
        .collect();
    let mut results = Vec::new();
    for set in file.sets.values() {
        for b in &set.boxes {
            let Some(orig) = file.classes.original(b.class_id) else {
                return Err(Error::UnknownCategory {
                    id: b.class_id as i64,
                    context: format!("saving predictions for image {}", set.image_id),
                });
            };
            results.push(RawResult {
                image_id: IdValue::Str(set.image_id.clone()),
                category_id: orig,
                bbox: [b.x_min, b.y_min, b.x_max - b.x_min, b.y_max - b.y_min],
                score: b.confidence,
            });
        }
    }
    let out = OutPredFile {
        schema: SCHEMA_VERSION,
        source_id: &file.source_id,
        bbox_format: BboxFormat::Xywh,
        images,
        categories,
        results,
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    Ok(text)
}

/// Write a prediction file to disk.
pub fn save_predictions(file: &PredictionsFile, path: impl AsRef<Path>) -> Result<()> {
    let text = predictions_to_json(file)?;
    fs::write(path.as_ref(), text)?;
    Ok(())
}

#[allow(dead_code)]
fn _assert_pathbuf_in_error(_p: PathBuf) {}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn minimal_annotation_file_converts_to_corners() {
        let dir = tempdir().unwrap();
        let p = write(
            dir.path(),
            "g.json",
            r#"{
                "schema": "detfuse/1",
                "images": [{"id": "a", "file_name": "a.png", "width": 100, "height": 80}],
                "annotations": [{"image_id": "a", "category_id": 5, "bbox": [10, 10, 20, 30]}],
                "categories": [{"id": 5, "name": "ascaris"}]
            }"#,
        );
        let (manifest, gts) = load_annotations(&p).unwrap();
        assert_eq!(manifest.entries.len(), 1);
        assert_eq!(manifest.classes.name(0), Some("ascaris"));
        let gt = &gts["a"];
        assert_eq!(gt.boxes.len(), 1);
        let b = gt.boxes[0];
        assert_eq!((b.x_min, b.y_min, b.x_max, b.y_max), (10.0, 10.0, 30.0, 40.0));
        assert_eq!(b.confidence, 1.0);
        assert_eq!(b.class_id, 0);
    }

    #[test]
    fn empty_annotations_is_fine() {
        let dir = tempdir().unwrap();
        let p = write(
            dir.path(),
            "g.json",
            r#"{"images": [{"id": 1, "width": 10, "height": 10}],
                "annotations": [], "categories": [{"id": 0, "name": "x"}]}"#,
        );
        let (manifest, gts) = load_annotations(&p).unwrap();
        assert_eq!(manifest.entries[0].image_id, "1");
        assert!(gts["1"].boxes.is_empty());
    }

    #[test]
    fn duplicate_image_id_is_hard_error() {
        let dir = tempdir().unwrap();
        let p = write(
            dir.path(),
            "g.json",
            r#"{"images": [{"id": "a", "width": 10, "height": 10},
                           {"id": "a", "width": 10, "height": 10}],
                "annotations": [], "categories": []}"#,
        );
        assert!(matches!(
            load_annotations(&p),
            Err(Error::DuplicateImageId(id)) if id == "a"
        ));
    }

    #[test]
    fn negative_extent_boxes_are_listed() {
        let dir = tempdir().unwrap();
        let p = write(
            dir.path(),
            "g.json",
            r#"{"images": [{"id": "a", "width": 100, "height": 100}],
                "annotations": [
                    {"image_id": "a", "category_id": 0, "bbox": [1, 1, -5, 5]},
                    {"image_id": "a", "category_id": 0, "bbox": [1, 1, 5, 5]},
                    {"image_id": "a", "category_id": 0, "bbox": [1, 1, 5, -5]}],
                "categories": [{"id": 0, "name": "x"}]}"#,
        );
        match load_annotations(&p) {
            Err(Error::RejectedRecords { rejected, .. }) => {
                assert_eq!(rejected.len(), 2);
                assert!(rejected[0].contains("#0"));
                assert!(rejected[1].contains("#2"));
            }
            other => panic!("expected RejectedRecords, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        let dir = tempdir().unwrap();
        let p = write(dir.path(), "g.json", "{\"images\": [,]}");
        match load_annotations(&p) {
            Err(Error::Schema { detail, .. }) => assert!(detail.contains("line")),
            other => panic!("expected Schema error, got {other:?}"),
        }
    }

    fn sample_predictions() -> &'static str {
        r#"{
            "schema": "detfuse/1",
            "source_id": "modelA@1.0",
            "images": [{"id": "a", "width": 100, "height": 80, "scale_tag": 1.0},
                       {"id": "b", "width": 100, "height": 80}],
            "categories": [{"id": 3, "name": "x"}, {"id": 7, "name": "y"}],
            "results": [
                {"image_id": "a", "category_id": 3, "bbox": [0, 0, 10, 10], "score": 0.9},
                {"image_id": "a", "category_id": 7, "bbox": [5, 5, 10, 10], "score": 0.5}
            ]
        }"#
    }

    #[test]
    fn predictions_round_trip_exactly() {
        let dir = tempdir().unwrap();
        let p = write(dir.path(), "p.json", sample_predictions());
        let loaded = load_predictions(&p).unwrap();
        assert_eq!(loaded.source_id, "modelA@1.0");
        assert_eq!(loaded.sets.len(), 2);
        assert!(loaded.sets["b"].boxes.is_empty());
        assert_eq!(loaded.sets["a"].frame.scale_tag, Some(1.0));

        let out = dir.path().join("round.json");
        save_predictions(&loaded, &out).unwrap();
        let again = load_predictions(&out).unwrap();
        assert_eq!(again, loaded);
    }

    #[test]
    fn score_out_of_range_is_rejected() {
        let dir = tempdir().unwrap();
        let bad = sample_predictions().replace("0.9", "1.5");
        let p = write(dir.path(), "p.json", &bad);
        match load_predictions(&p) {
            Err(Error::Schema { detail, .. }) => assert!(detail.contains("score")),
            other => panic!("expected Schema error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_category_is_named() {
        let dir = tempdir().unwrap();
        let bad = sample_predictions().replace("\"category_id\": 7", "\"category_id\": 9");
        let p = write(dir.path(), "p.json", &bad);
        match load_predictions(&p) {
            Err(Error::UnknownCategory { id, .. }) => assert_eq!(id, 9),
            other => panic!("expected UnknownCategory, got {other:?}"),
        }
    }

    #[test]
    fn empty_results_gives_empty_sets() {
        let dir = tempdir().unwrap();
        let p = write(
            dir.path(),
            "p.json",
            r#"{"images": [{"id": "a", "width": 10, "height": 10}],
                "categories": [{"id": 0, "name": "x"}], "results": []}"#,
        );
        let loaded = load_predictions(&p).unwrap();
        assert_eq!(loaded.sets.len(), 1);
        assert!(loaded.sets["a"].boxes.is_empty());
    }

    #[test]
    fn external_class_map_validates_categories() {
        let dir = tempdir().unwrap();
        let p = write(
            dir.path(),
            "p.json",
            r#"{"images": [{"id": "a", "width": 10, "height": 10}],
                "results": [{"image_id": "a", "category_id": 3, "bbox": [0,0,1,1], "score": 0.5}]}"#,
        );
        // no categories section: standalone load fails, external map works
        assert!(load_predictions(&p).is_err());
        let map = ClassMap::new(vec![(3, "x".into())]).unwrap();
        let loaded = load_predictions_with(&p, &map).unwrap();
        assert_eq!(loaded.sets["a"].boxes[0].class_id, 0);
    }

    #[test]
    fn xyxy_format_is_accepted() {
        let dir = tempdir().unwrap();
        let p = write(
            dir.path(),
            "p.json",
            r#"{"bbox_format": "xyxy",
                "images": [{"id": "a", "width": 100, "height": 100}],
                "categories": [{"id": 0, "name": "x"}],
                "results": [{"image_id": "a", "category_id": 0, "bbox": [10, 10, 30, 40], "score": 0.5}]}"#,
        );
        let loaded = load_predictions(&p).unwrap();
        let b = loaded.sets["a"].boxes[0];
        assert_eq!((b.x_max, b.y_max), (30.0, 40.0));
    }
}
