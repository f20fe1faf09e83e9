//! Spatial-domain high-boost enhancement ("mixed space" family).
//!
//! The boost is computed on the BT.601 luminance plane and added back to all
//! three channels:
//!
//! ```text
//! lap    = conv(y, K)            K: all ones, center 1 - k^2   (k odd)
//! mask   = boxfilter(y, filtersize) / 255
//! out_c  = clamp(c + (-lap) * mask)
//! ```
//!
//! Both convolutions use edge-replicate padding. The negative-Laplacian term
//! sharpens; the local-mean mask scales the boost down in dark regions. The
//! cited method's exact transfer function is not published, so this spatial
//! realization is the documented stand-in and is isolated behind this one
//! function.

use crate::error::{Error, Result};

use super::blur::box_sum_plane;
use super::{apply_luma_delta, luma_plane, Raster};

pub fn mixed_space_enhance(img: &Raster, kernelsize: u32, filtersize: (u32, u32)) -> Result<Raster> {
    if kernelsize == 0 || kernelsize.is_multiple_of(2) {
        return Err(Error::InvalidParam(format!(
            "mixed_space kernelsize must be odd, got {kernelsize}"
        )));
    }
    if filtersize.0 == 0 || filtersize.1 == 0 {
        return Err(Error::InvalidParam(
            "mixed_space filtersize must be >= 1".into(),
        ));
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Ok(img.clone());
    }

    let y = luma_plane(img);
    let k = kernelsize as usize;
    let window = box_sum_plane(&y, w, h, k, k);
    let ksq = (k * k) as f64;

    let (fw, fh) = (filtersize.0 as usize, filtersize.1 as usize);
    let mask_sum = box_sum_plane(&y, w, h, fw, fh);
    let mask_norm = (fw * fh) as f64 * 255.0;

    let delta: Vec<f64> = (0..w * h)
        .map(|i| {
            let lap = window[i] - ksq * y[i];
            -lap * (mask_sum[i] / mask_norm)
        })
        .collect();

    Ok(apply_luma_delta(img, &delta))
}
