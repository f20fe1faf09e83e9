//! Deterministic, seedable raster augmentations over 8-bit RGB images.
//!
//! Three op families: contrast enhancement (clahe, mixed_space), synthetic
//! interference (gaussian_noise, salt_pepper, fog, blur) and simple geometry
//! (hflip, vflip, resize). Photometric ops never change image dimensions or
//! box lists; geometric ops report the box transform they induce so a
//! pipeline keeps annotations consistent with the final geometry.
//!
//! Every stochastic op is a pure function of (input, params, seed); equal
//! inputs give byte-identical outputs. Pipelines without per-op seeds derive
//! per-op streams from a base seed, the op index and an image tag (see
//! [`crate::rng`]).

mod blur;
mod clahe;
mod enhance;
mod flipresize;
mod noise;

pub use blur::blur;
pub use clahe::clahe;
pub use enhance::mixed_space_enhance;
pub use flipresize::{hflip, resize, vflip, BoxTransform};
pub use noise::{fog, fog_uniform, gaussian_noise, salt_pepper};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::rng::derive_seed;

/// 8-bit RGB raster, row-major, channel-interleaved.
pub type Raster = image::RgbImage;

/// BT.601 luminance of one pixel.
#[inline]
pub(crate) fn luma(p: &[u8; 3]) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

/// Luminance plane of the whole image, row-major.
pub(crate) fn luma_plane(img: &Raster) -> Vec<f64> {
    img.pixels().map(|p| luma(&p.0)).collect()
}

/// Add a per-pixel delta to every channel, rounding and clamping to u8.
pub(crate) fn apply_luma_delta(img: &Raster, delta: &[f64]) -> Raster {
    let (w, h) = img.dimensions();
    let mut out = Raster::new(w, h);
    for (i, (src, dst)) in img.pixels().zip(out.pixels_mut()).enumerate() {
        let d = delta[i];
        for c in 0..3 {
            dst.0[c] = (src.0[c] as f64 + d).round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

fn default_cliplimit() -> f64 {
    8.0
}
fn default_tiles() -> (u32, u32) {
    (8, 8)
}
fn default_kernelsize() -> u32 {
    3
}
fn default_filtersize() -> (u32, u32) {
    (5, 5)
}
fn default_noise_std() -> f64 {
    0.2
}
fn default_sp_number() -> u64 {
    500
}
fn default_fog_brightness() -> f64 {
    0.4
}
fn default_fog_concentration() -> f64 {
    0.03
}
fn default_blur_kernel() -> (u32, u32) {
    (6, 6)
}

/// One augmentation op with its parameters. Field defaults follow the
/// paper-profile settings, so a bare `{"kind": "clahe"}` entry is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AugmentKind {
    Clahe {
        #[serde(default = "default_cliplimit")]
        cliplimit: f64,
        #[serde(default = "default_tiles")]
        tiles: (u32, u32),
    },
    MixedSpace {
        #[serde(default = "default_kernelsize")]
        kernelsize: u32,
        #[serde(default = "default_filtersize")]
        filtersize: (u32, u32),
    },
    GaussianNoise {
        #[serde(default)]
        mean: f64,
        #[serde(default = "default_noise_std")]
        std: f64,
    },
    SaltPepper {
        #[serde(default = "default_sp_number")]
        number: u64,
        /// Interpret `number` per megapixel instead of as an absolute count.
        #[serde(default)]
        per_megapixel: bool,
    },
    Fog {
        #[serde(default = "default_fog_brightness")]
        brightness: f64,
        #[serde(default = "default_fog_concentration")]
        concentration: f64,
    },
    Blur {
        #[serde(default = "default_blur_kernel")]
        kernelsize: (u32, u32),
    },
    Hflip,
    Vflip,
    Resize {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        width: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        height: Option<u32>,
    },
}

impl AugmentKind {
    pub fn name(&self) -> &'static str {
        match self {
            AugmentKind::Clahe { .. } => "clahe",
            AugmentKind::MixedSpace { .. } => "mixed_space",
            AugmentKind::GaussianNoise { .. } => "gaussian_noise",
            AugmentKind::SaltPepper { .. } => "salt_pepper",
            AugmentKind::Fog { .. } => "fog",
            AugmentKind::Blur { .. } => "blur",
            AugmentKind::Hflip => "hflip",
            AugmentKind::Vflip => "vflip",
            AugmentKind::Resize { .. } => "resize",
        }
    }

    /// Ops that consume random draws and therefore need a seed.
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            AugmentKind::GaussianNoise { .. }
                | AugmentKind::SaltPepper { .. }
                | AugmentKind::Fog { .. }
        )
    }

    /// Ops that change image geometry and therefore transform boxes.
    pub fn is_geometric(&self) -> bool {
        matches!(
            self,
            AugmentKind::Hflip | AugmentKind::Vflip | AugmentKind::Resize { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AugmentKind::Clahe { cliplimit, tiles } => {
                if cliplimit < 1.0 || !cliplimit.is_finite() {
                    return Err(Error::InvalidParam(format!(
                        "clahe cliplimit must be >= 1, got {cliplimit}"
                    )));
                }
                if tiles.0 == 0 || tiles.1 == 0 {
                    return Err(Error::InvalidParam("clahe tile grid must be >= 1x1".into()));
                }
            }
            AugmentKind::MixedSpace {
                kernelsize,
                filtersize,
            } => {
                if kernelsize == 0 || kernelsize.is_multiple_of(2) {
                    return Err(Error::InvalidParam(format!(
                        "mixed_space kernelsize must be odd, got {kernelsize}"
                    )));
                }
                if filtersize.0 == 0 || filtersize.1 == 0 {
                    return Err(Error::InvalidParam("mixed_space filtersize must be >= 1".into()));
                }
            }
            AugmentKind::GaussianNoise { std, .. } => {
                if std < 0.0 || !std.is_finite() {
                    return Err(Error::InvalidParam(format!(
                        "gaussian_noise std must be >= 0, got {std}"
                    )));
                }
            }
            AugmentKind::SaltPepper { .. } => {}
            AugmentKind::Fog {
                brightness,
                concentration,
            } => {
                if !(0.0..=1.0).contains(&brightness) {
                    return Err(Error::InvalidParam(format!(
                        "fog brightness must be in [0,1], got {brightness}"
                    )));
                }
                if concentration <= 0.0 || !concentration.is_finite() {
                    return Err(Error::InvalidParam(format!(
                        "fog concentration must be > 0, got {concentration}"
                    )));
                }
            }
            AugmentKind::Blur { kernelsize } => {
                if kernelsize.0 == 0 || kernelsize.1 == 0 {
                    return Err(Error::InvalidParam("blur kernel dims must be >= 1".into()));
                }
            }
            AugmentKind::Hflip | AugmentKind::Vflip => {}
            AugmentKind::Resize {
                scale,
                width,
                height,
            } => match (scale, width, height) {
                (Some(s), None, None) => {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::InvalidParam(format!(
                            "resize scale must be > 0, got {s}"
                        )));
                    }
                }
                (None, Some(w), Some(h)) => {
                    if w == 0 || h == 0 {
                        return Err(Error::InvalidParam("resize target must be >= 1x1".into()));
                    }
                }
                _ => {
                    return Err(Error::InvalidParam(
                        "resize needs either scale or width+height".into(),
                    ))
                }
            },
        }
        Ok(())
    }
}

/// An [`AugmentKind`] plus an optional private seed for its random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    #[serde(flatten)]
    pub kind: AugmentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl AugmentSpec {
    pub fn new(kind: AugmentKind) -> Self {
        AugmentSpec { kind, seed: None }
    }

    pub fn seeded(kind: AugmentKind, seed: u64) -> Self {
        AugmentSpec {
            kind,
            seed: Some(seed),
        }
    }
}

/// Ordered list of augmentation ops applied to an image and its boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentPipeline {
    pub specs: Vec<AugmentSpec>,
    /// Base seed for ops without a private one; per-op streams are derived
    /// from (base_seed, op index, image tag).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
}

impl AugmentPipeline {
    pub fn new(specs: Vec<AugmentSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidParam("augmentation pipeline is empty".into()));
        }
        for s in &specs {
            s.kind.validate()?;
        }
        Ok(AugmentPipeline {
            specs,
            base_seed: None,
        })
    }

    pub fn with_base_seed(mut self, seed: u64) -> Self {
        self.base_seed = Some(seed);
        self
    }

    /// Apply all ops in order. Equivalent to [`Self::apply_tagged`] with an
    /// empty tag; use the tagged form when fanning out over many images.
    pub fn apply(&self, img: &Raster, boxes: &[BBox]) -> Result<(Raster, Vec<BBox>)> {
        self.apply_tagged(img, boxes, "")
    }

    /// Apply all ops in order, deriving per-op random streams from
    /// (base seed, op index, `tag`).
    pub fn apply_tagged(
        &self,
        img: &Raster,
        boxes: &[BBox],
        tag: &str,
    ) -> Result<(Raster, Vec<BBox>)> {
        check_box_bounds(boxes, img.width(), img.height())?;
        let mut cur = img.clone();
        let mut cur_boxes = boxes.to_vec();
        for (index, spec) in self.specs.iter().enumerate() {
            let seed = self.op_seed(spec, index, tag)?;
            let (next, tf) = apply_spec(&cur, spec, seed)?;
            if !matches!(tf, BoxTransform::Identity) {
                cur_boxes = cur_boxes.iter().map(|b| tf.apply(b)).collect();
            }
            cur = next;
        }
        Ok((cur, cur_boxes))
    }

    fn op_seed(&self, spec: &AugmentSpec, index: usize, tag: &str) -> Result<Option<u64>> {
        if !spec.kind.is_stochastic() {
            return Ok(None);
        }
        if let Some(s) = spec.seed {
            return Ok(Some(s));
        }
        match self.base_seed {
            Some(base) => Ok(Some(derive_seed(base, index as u64, tag))),
            None => Err(Error::MissingSeed(spec.kind.name().into())),
        }
    }
}

fn check_box_bounds(boxes: &[BBox], width: u32, height: u32) -> Result<()> {
    let (w, h) = (width as f64, height as f64);
    let eps = 1e-9;
    for b in boxes {
        if b.x_min < -eps || b.y_min < -eps || b.x_max > w + eps || b.y_max > h + eps {
            return Err(Error::BoxOutOfBounds {
                x_min: b.x_min,
                y_min: b.y_min,
                x_max: b.x_max,
                y_max: b.y_max,
                width,
                height,
            });
        }
    }
    Ok(())
}

/// Apply one spec; returns the new raster and the box transform it induces.
pub fn apply_spec(
    img: &Raster,
    spec: &AugmentSpec,
    seed: Option<u64>,
) -> Result<(Raster, BoxTransform)> {
    spec.kind.validate()?;
    let need_seed = || seed.ok_or_else(|| Error::MissingSeed(spec.kind.name().into()));
    match spec.kind {
        AugmentKind::Clahe { cliplimit, tiles } => {
            Ok((clahe(img, cliplimit, tiles)?, BoxTransform::Identity))
        }
        AugmentKind::MixedSpace {
            kernelsize,
            filtersize,
        } => Ok((
            mixed_space_enhance(img, kernelsize, filtersize)?,
            BoxTransform::Identity,
        )),
        AugmentKind::GaussianNoise { mean, std } => Ok((
            gaussian_noise(img, mean, std, need_seed()?)?,
            BoxTransform::Identity,
        )),
        AugmentKind::SaltPepper {
            number,
            per_megapixel,
        } => {
            let pixels = img.width() as u64 * img.height() as u64;
            let effective = if per_megapixel {
                (number as f64 * pixels as f64 / 1e6).round() as u64
            } else {
                number
            };
            Ok((
                salt_pepper(img, effective, need_seed()?)?,
                BoxTransform::Identity,
            ))
        }
        AugmentKind::Fog {
            brightness,
            concentration,
        } => Ok((
            fog(img, brightness, concentration, need_seed()?)?,
            BoxTransform::Identity,
        )),
        AugmentKind::Blur { kernelsize } => Ok((blur(img, kernelsize)?, BoxTransform::Identity)),
        AugmentKind::Hflip => Ok((
            hflip(img),
            BoxTransform::Hflip {
                width: img.width() as f64,
            },
        )),
        AugmentKind::Vflip => Ok((
            vflip(img),
            BoxTransform::Vflip {
                height: img.height() as f64,
            },
        )),
        AugmentKind::Resize {
            scale,
            width,
            height,
        } => {
            let (in_w, in_h) = img.dimensions();
            let (out_w, out_h) = match (scale, width, height) {
                (Some(s), _, _) => (
                    ((in_w as f64 * s).round() as u32).max(1),
                    ((in_h as f64 * s).round() as u32).max(1),
                ),
                (None, Some(w), Some(h)) => (w, h),
                _ => unreachable!("validated above"),
            };
            Ok((
                resize(img, out_w, out_h)?,
                BoxTransform::Scale {
                    sx: out_w as f64 / in_w as f64,
                    sy: out_h as f64 / in_h as f64,
                },
            ))
        }
    }
}
