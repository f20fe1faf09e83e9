//! Axis-aligned box geometry: IoU, areas and coordinate rescaling.
//!
//! Coordinates are continuous `f64` in the absolute pixel frame of one image;
//! fusion produces weighted-average coordinates, so nothing here quantizes.
//! Boxes are stored corner-form. Degenerate (zero-area) boxes are legal
//! values; post-processing filters them instead of construction rejecting
//! them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One detection or ground-truth box in absolute pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub class_id: u32,
    pub confidence: f64,
}

impl BBox {
    /// Validated constructor: corners must be ordered and confidence in [0,1].
    pub fn new(
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        class_id: u32,
        confidence: f64,
    ) -> Result<Self> {
        if !(x_min <= x_max && y_min <= y_max) {
            return Err(Error::InvalidParam(format!(
                "box corners out of order: ({x_min},{y_min})-({x_max},{y_max})"
            )));
        }
        if !(0.0..=1.0).contains(&confidence) || !confidence.is_finite() {
            return Err(Error::InvalidParam(format!(
                "confidence {confidence} outside [0,1]"
            )));
        }
        Ok(BBox {
            x_min,
            y_min,
            x_max,
            y_max,
            class_id,
            confidence,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        self.area() == 0.0
    }

    /// Same box with a different confidence (clamped to [0,1]).
    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence.clamp(0.0, 1.0);
        self
    }
}

/// Identity and pixel dimensions of one image rendition.
///
/// `scale_tag` marks a TTA rendition's relative scale; 1.0 is the original.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_tag: Option<f64>,
}

impl ImageMeta {
    pub fn new(image_id: impl Into<String>, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(ImageMeta {
            image_id: image_id.into(),
            width,
            height,
            scale_tag: None,
        })
    }

    pub fn with_scale(mut self, scale_tag: f64) -> Result<Self> {
        if scale_tag <= 0.0 || !scale_tag.is_finite() {
            return Err(Error::InvalidParam(format!(
                "scale_tag must be positive, got {scale_tag}"
            )));
        }
        self.scale_tag = Some(scale_tag);
        Ok(self)
    }
}

/// Intersection-over-union of two boxes. Degenerate pairs yield 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let ih = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Map a box between two renditions of the same image.
///
/// Coordinates are multiplied by the per-axis dimension ratios; class and
/// confidence pass through.
pub fn rescale(b: &BBox, from: &ImageMeta, to: &ImageMeta) -> Result<BBox> {
    if from.image_id != to.image_id {
        return Err(Error::ImageIdMismatch {
            left: from.image_id.clone(),
            right: to.image_id.clone(),
        });
    }
    let sx = to.width as f64 / from.width as f64;
    let sy = to.height as f64 / from.height as f64;
    Ok(BBox {
        x_min: b.x_min * sx,
        y_min: b.y_min * sy,
        x_max: b.x_max * sx,
        y_max: b.y_max * sy,
        class_id: b.class_id,
        confidence: b.confidence,
    })
}

/// Box area as a fraction of the image area, clamped to [0, 1].
pub fn area_fraction(b: &BBox, img: &ImageMeta) -> f64 {
    let img_area = img.width as f64 * img.height as f64;
    (b.area() / img_area).clamp(0.0, 1.0)
}
