//! Contrast-limited adaptive histogram equalization on the luminance channel.
//!
//! The exact procedure is pinned here because downstream golden files depend
//! on it:
//!
//! * luminance = BT.601 weights, binned to 256 levels by rounding;
//! * tile `i` of `t` spans columns `[i*w/t, (i+1)*w/t)`, so grids divide
//!   non-multiple image sizes into tiles differing by at most one pixel;
//! * per-tile histogram counts are clipped at `max(1, floor(cliplimit *
//!   tile_area / 256))`; the excess is redistributed uniformly, the residue
//!   spread with the classic stride rule;
//! * the tile lookup is `255 * cdf / tile_area`, kept in `f64`; a tile whose
//!   histogram occupies a single bin keeps the identity lookup (equalizing a
//!   flat patch would only shift its level);
//! * each pixel is mapped by bilinear interpolation between the lookups of
//!   the four nearest tile centers, and the resulting luminance delta is
//!   added to all three channels, so chroma offsets survive.
//!
//! Images smaller than the tile grid fall back to a single global tile.

use crate::error::{Error, Result};

use super::{apply_luma_delta, luma_plane, Raster};

pub fn clahe(img: &Raster, cliplimit: f64, tiles: (u32, u32)) -> Result<Raster> {
    if cliplimit < 1.0 || !cliplimit.is_finite() {
        return Err(Error::InvalidParam(format!(
            "clahe cliplimit must be >= 1, got {cliplimit}"
        )));
    }
    if tiles.0 == 0 || tiles.1 == 0 {
        return Err(Error::InvalidParam("clahe tile grid must be >= 1x1".into()));
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Ok(img.clone());
    }
    let (tx, ty) = if w < tiles.0 as usize || h < tiles.1 as usize {
        (1, 1)
    } else {
        (tiles.0 as usize, tiles.1 as usize)
    };

    let y = luma_plane(img);
    let bins: Vec<u8> = y
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();

    let xb: Vec<usize> = (0..=tx).map(|i| i * w / tx).collect();
    let yb: Vec<usize> = (0..=ty).map(|j| j * h / ty).collect();

    let mut luts: Vec<Vec<[f64; 256]>> = Vec::with_capacity(ty);
    for tj in 0..ty {
        let mut row = Vec::with_capacity(tx);
        for ti in 0..tx {
            let mut hist = [0u64; 256];
            for py in yb[tj]..yb[tj + 1] {
                for px in xb[ti]..xb[ti + 1] {
                    hist[bins[py * w + px] as usize] += 1;
                }
            }
            let area = ((yb[tj + 1] - yb[tj]) * (xb[ti + 1] - xb[ti])) as u64;
            row.push(tile_lut(&hist, area, cliplimit));
        }
        luts.push(row);
    }

    let cxs: Vec<f64> = (0..tx).map(|i| (xb[i] + xb[i + 1]) as f64 / 2.0).collect();
    let cys: Vec<f64> = (0..ty).map(|j| (yb[j] + yb[j + 1]) as f64 / 2.0).collect();

    let mut delta = vec![0.0f64; w * h];
    for py in 0..h {
        let (j0, j1, wy) = locate(py as f64 + 0.5, &cys);
        for px in 0..w {
            let (i0, i1, wx) = locate(px as f64 + 0.5, &cxs);
            let b = bins[py * w + px] as usize;
            let top = (1.0 - wx) * luts[j0][i0][b] + wx * luts[j0][i1][b];
            let bottom = (1.0 - wx) * luts[j1][i0][b] + wx * luts[j1][i1][b];
            let mapped = (1.0 - wy) * top + wy * bottom;
            delta[py * w + px] = mapped - b as f64;
        }
    }

    Ok(apply_luma_delta(img, &delta))
}

/// Clip + redistribute a tile histogram, then return the equalization lookup.
fn tile_lut(hist: &[u64; 256], area: u64, cliplimit: f64) -> [f64; 256] {
    let occupied = hist.iter().filter(|&&c| c > 0).count();
    let mut lut = [0.0f64; 256];
    if occupied <= 1 || area == 0 {
        for (v, slot) in lut.iter_mut().enumerate() {
            *slot = v as f64;
        }
        return lut;
    }

    let clip = ((cliplimit * area as f64 / 256.0).floor() as u64).max(1);
    let mut clipped = *hist;
    let mut excess = 0u64;
    for bin in clipped.iter_mut() {
        if *bin > clip {
            excess += *bin - clip;
            *bin = clip;
        }
    }
    let batch = excess / 256;
    let mut residual = (excess % 256) as usize;
    for bin in clipped.iter_mut() {
        *bin += batch;
    }
    if let Some(step) = 256usize.checked_div(residual) {
        let step = step.max(1);
        let mut i = 0;
        while i < 256 && residual > 0 {
            clipped[i] += 1;
            residual -= 1;
            i += step;
        }
    }

    let scale = 255.0 / area as f64;
    let mut cum = 0u64;
    for v in 0..256 {
        cum += clipped[v];
        lut[v] = cum as f64 * scale;
    }
    lut
}

/// Bracketing tile centers and interpolation weight for position `p`.
fn locate(p: f64, centers: &[f64]) -> (usize, usize, f64) {
    let last = centers.len() - 1;
    if p <= centers[0] {
        return (0, 0, 0.0);
    }
    if p >= centers[last] {
        return (last, last, 0.0);
    }
    let mut i = 0;
    while p > centers[i + 1] {
        i += 1;
    }
    let t = (p - centers[i]) / (centers[i + 1] - centers[i]);
    (i, i + 1, t)
}
