//! Error type shared by every module of the toolkit.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two operands refer to different images.
    #[error("image id mismatch: {left:?} vs {right:?}")]
    ImageIdMismatch { left: String, right: String },

    /// Detection sets passed to a fusion op do not share a pixel frame.
    #[error("frame mismatch for image {image_id:?}: {detail}")]
    FrameMismatch { image_id: String, detail: String },

    /// A frame that must carry a scale tag does not.
    #[error("missing scale tag on frame of {0:?}")]
    MissingScaleTag(String),

    /// A parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// A stochastic op was invoked without any seed to derive its stream from.
    #[error("op {0:?} is stochastic but neither the spec nor the pipeline carries a seed")]
    MissingSeed(String),

    /// Salt-and-pepper was asked to affect more pixels than the image has.
    #[error("salt-pepper count {number} exceeds pixel count {pixels}")]
    TooManyNoisePixels { number: u64, pixels: u64 },

    /// A box lies outside the image it is being transformed with.
    #[error("box ({x_min},{y_min})-({x_max},{y_max}) outside {width}x{height} image")]
    BoxOutOfBounds {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        width: u32,
        height: u32,
    },

    /// Predictions reference images absent from the ground truth.
    #[error("predictions reference unknown image ids: {0:?}")]
    UnknownImageIds(Vec<String>),

    /// A record references a category id that is not declared.
    #[error("unknown category id {id} in {context}")]
    UnknownCategory { id: i64, context: String },

    /// Two images in one file share an id.
    #[error("duplicate image id {0:?}")]
    DuplicateImageId(String),

    /// A class does not have enough members for the requested split.
    #[error("class {class:?} has {have} images, {need} requested for validation")]
    InsufficientClass {
        class: String,
        have: usize,
        need: usize,
    },

    /// Structurally invalid interchange file.
    #[error("schema error in {path}: {detail}")]
    Schema { path: PathBuf, detail: String },

    /// Records rejected while loading; nothing was loaded.
    #[error("{path}: {} rejected record(s): {}", rejected.len(), rejected.join("; "))]
    RejectedRecords {
        path: PathBuf,
        rejected: Vec<String>,
    },

    /// A sweep condition has no recorded prediction file.
    #[error("no prediction file recorded for condition {0:?}")]
    MissingCondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
