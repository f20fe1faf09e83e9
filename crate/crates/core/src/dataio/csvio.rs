//! Flat CSV importers for hand-made fixtures.
//!
//! Ground truth: `image_id,width,height,class_id,x_min,y_min,x_max,y_max`.
//! Predictions: same plus `confidence` and an optional `scale_tag`.
//! Class ids are already dense here; the class map is synthesized as
//! `class_0 .. class_{max}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::fusion::DetectionSet;
use crate::geometry::{BBox, ImageMeta};

use super::{ClassMap, DatasetManifest, ManifestEntry, PredictionsFile};

#[derive(Debug, Deserialize)]
struct GtRow {
    image_id: String,
    width: u32,
    height: u32,
    class_id: u32,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

#[derive(Debug, Deserialize)]
struct PredRow {
    image_id: String,
    width: u32,
    height: u32,
    class_id: u32,
    confidence: f64,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    #[serde(default)]
    scale_tag: Option<f64>,
}

pub fn load_ground_truth_csv(
    path: impl AsRef<Path>,
) -> Result<(DatasetManifest, BTreeMap<String, GroundTruth>)> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let mut entries: BTreeMap<String, ManifestEntry> = BTreeMap::new();
    let mut gts: BTreeMap<String, Vec<BBox>> = BTreeMap::new();
    let mut rejected = Vec::new();
    let mut max_class = 0u32;

    for (line, row) in reader.deserialize::<GtRow>().enumerate() {
        let row = row?;
        let b = match BBox::new(row.x_min, row.y_min, row.x_max, row.y_max, row.class_id, 1.0) {
            Ok(b) => b,
            Err(e) => {
                rejected.push(format!("row #{line}: {e}"));
                continue;
            }
        };
        max_class = max_class.max(row.class_id);
        let entry = entries.entry(row.image_id.clone()).or_insert(ManifestEntry {
            image_id: row.image_id.clone(),
            file_name: None,
            width: row.width,
            height: row.height,
            class_counts: BTreeMap::new(),
        });
        *entry.class_counts.entry(row.class_id).or_default() += 1;
        gts.entry(row.image_id).or_default().push(b);
    }
    if !rejected.is_empty() {
        return Err(Error::RejectedRecords {
            path: path.to_path_buf(),
            rejected,
        });
    }

    let manifest = DatasetManifest {
        entries: entries.values().cloned().collect(),
        classes: ClassMap::from_count(max_class as usize + 1),
    };
    let gts = gts
        .into_iter()
        .map(|(id, boxes)| (id.clone(), GroundTruth { image_id: id, boxes }))
        .collect();
    Ok((manifest, gts))
}

pub fn load_predictions_csv(path: impl AsRef<Path>) -> Result<PredictionsFile> {
    let path = path.as_ref();
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "predictions".into());
    let mut reader = csv::Reader::from_path(path)?;
    let mut sets: BTreeMap<String, DetectionSet> = BTreeMap::new();
    let mut rejected = Vec::new();
    let mut max_class = 0u32;

    for (line, row) in reader.deserialize::<PredRow>().enumerate() {
        let row = row?;
        let b = match BBox::new(
            row.x_min,
            row.y_min,
            row.x_max,
            row.y_max,
            row.class_id,
            row.confidence,
        ) {
            Ok(b) => b,
            Err(e) => {
                rejected.push(format!("row #{line}: {e}"));
                continue;
            }
        };
        max_class = max_class.max(row.class_id);
        if !sets.contains_key(&row.image_id) {
            let mut frame = ImageMeta::new(row.image_id.clone(), row.width, row.height)?;
            if let Some(tag) = row.scale_tag {
                frame = frame.with_scale(tag)?;
            }
            sets.insert(
                row.image_id.clone(),
                DetectionSet {
                    image_id: row.image_id.clone(),
                    source_id: source_id.clone(),
                    frame,
                    boxes: Vec::new(),
                },
            );
        }
        sets.get_mut(&row.image_id).expect("inserted above").boxes.push(b);
    }
    if !rejected.is_empty() {
        return Err(Error::RejectedRecords {
            path: path.to_path_buf(),
            rejected,
        });
    }

    Ok(PredictionsFile {
        source_id,
        classes: ClassMap::from_count(max_class as usize + 1),
        sets,
    })
}
