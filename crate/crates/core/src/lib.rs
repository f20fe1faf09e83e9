//! detfuse: the non-neural stages of a parasitic-egg detection pipeline.
//!
//! The crate covers everything around the detectors themselves: seeded image
//! augmentation ([`augment`]), multi-scale TTA merging and Weighted Boxes
//! Fusion ([`fusion`]), per-class post-processing ([`postprocess`]),
//! COCO-style evaluation ([`eval`]), dataset splitting and interchange
//! formats ([`dataio`]), and a robustness-sweep harness ([`robustbench`]).
//! Detections enter as data (JSON or CSV); no neural networks are invoked.
//!
//! All randomized behavior flows through [`rng`]: fixed seeds give
//! byte-identical artifacts regardless of worker fan-out.

pub mod augment;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod postprocess;
pub mod rng;
pub mod robustbench;

pub use error::{Error, Result};
pub use geometry::{area_fraction, iou, rescale, BBox, ImageMeta};
