//! Flips and bilinear resize, plus the box transforms they induce.

use crate::error::{Error, Result};
use crate::geometry::BBox;

use super::Raster;

/// The coordinate map a geometric op applies to annotation boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoxTransform {
    Identity,
    Hflip { width: f64 },
    Vflip { height: f64 },
    Scale { sx: f64, sy: f64 },
}

impl BoxTransform {
    pub fn apply(&self, b: &BBox) -> BBox {
        match *self {
            BoxTransform::Identity => *b,
            BoxTransform::Hflip { width } => BBox {
                x_min: width - b.x_max,
                x_max: width - b.x_min,
                ..*b
            },
            BoxTransform::Vflip { height } => BBox {
                y_min: height - b.y_max,
                y_max: height - b.y_min,
                ..*b
            },
            BoxTransform::Scale { sx, sy } => BBox {
                x_min: b.x_min * sx,
                x_max: b.x_max * sx,
                y_min: b.y_min * sy,
                y_max: b.y_max * sy,
                ..*b
            },
        }
    }
}

pub fn hflip(img: &Raster) -> Raster {
    let (w, h) = img.dimensions();
    Raster::from_fn(w, h, |x, y| *img.get_pixel(w - 1 - x, y))
}

pub fn vflip(img: &Raster) -> Raster {
    let (w, h) = img.dimensions();
    Raster::from_fn(w, h, |x, y| *img.get_pixel(x, h - 1 - y))
}

/// Bilinear resize with center-aligned sampling and edge clamping.
pub fn resize(img: &Raster, out_w: u32, out_h: u32) -> Result<Raster> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidParam("resize target must be >= 1x1".into()));
    }
    let (in_w, in_h) = img.dimensions();
    if (in_w, in_h) == (out_w, out_h) {
        return Ok(img.clone());
    }
    let sx = in_w as f64 / out_w as f64;
    let sy = in_h as f64 / out_h as f64;
    let mut out = Raster::new(out_w, out_h);
    for oy in 0..out_h {
        let src_y = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, in_h as f64 - 1.0);
        let y0 = src_y.floor() as u32;
        let y1 = (y0 + 1).min(in_h - 1);
        let fy = src_y - y0 as f64;
        for ox in 0..out_w {
            let src_x = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, in_w as f64 - 1.0);
            let x0 = src_x.floor() as u32;
            let x1 = (x0 + 1).min(in_w - 1);
            let fx = src_x - x0 as f64;
            let p00 = img.get_pixel(x0, y0).0;
            let p10 = img.get_pixel(x1, y0).0;
            let p01 = img.get_pixel(x0, y1).0;
            let p11 = img.get_pixel(x1, y1).0;
            let mut px = [0u8; 3];
            for c in 0..3 {
                let top = p00[c] as f64 + (p10[c] as f64 - p00[c] as f64) * fx;
                let bottom = p01[c] as f64 + (p11[c] as f64 - p01[c] as f64) * fx;
                px[c] = (top + (bottom - top) * fy).round().clamp(0.0, 255.0) as u8;
            }
            out.put_pixel(ox, oy, image::Rgb(px));
        }
    }
    Ok(out)
}
