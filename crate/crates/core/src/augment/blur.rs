//! Normalized box filter with edge-replicate padding.
//!
//! Even kernels anchor at `floor(k/2)`: a `k`-wide window at output position
//! `x` covers inputs `[x - floor(k/2), x + k - 1 - floor(k/2)]`, so a (6,6)
//! kernel turns an impulse at `c` into a plateau over `[c-2, c+3]`.

use crate::error::{Error, Result};

use super::Raster;

/// Windowed sum of a plane with edge-replicate padding.
pub(super) fn box_sum_plane(plane: &[f64], w: usize, h: usize, kw: usize, kh: usize) -> Vec<f64> {
    let ax = (kw / 2) as isize;
    let ay = (kh / 2) as isize;

    // horizontal pass
    let mut hsum = vec![0.0f64; w * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..w {
            let mut s = 0.0;
            for i in 0..kw as isize {
                let xi = (x as isize - ax + i).clamp(0, w as isize - 1) as usize;
                s += row[xi];
            }
            hsum[y * w + x] = s;
        }
    }

    // vertical pass
    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for j in 0..kh as isize {
                let yj = (y as isize - ay + j).clamp(0, h as isize - 1) as usize;
                s += hsum[yj * w + x];
            }
            out[y * w + x] = s;
        }
    }
    out
}

pub fn blur(img: &Raster, kernelsize: (u32, u32)) -> Result<Raster> {
    let (kw, kh) = (kernelsize.0 as usize, kernelsize.1 as usize);
    if kw == 0 || kh == 0 {
        return Err(Error::InvalidParam("blur kernel dims must be >= 1".into()));
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 || (kw == 1 && kh == 1) {
        return Ok(img.clone());
    }

    let norm = (kw * kh) as f64;
    let mut planes = [
        vec![0.0f64; w * h],
        vec![0.0f64; w * h],
        vec![0.0f64; w * h],
    ];
    for (i, p) in img.pixels().enumerate() {
        for (c, plane) in planes.iter_mut().enumerate() {
            plane[i] = p.0[c] as f64;
        }
    }

    let sums: Vec<Vec<f64>> = planes
        .iter()
        .map(|p| box_sum_plane(p, w, h, kw, kh))
        .collect();

    let mut out = Raster::new(w as u32, h as u32);
    for (i, p) in out.pixels_mut().enumerate() {
        for (c, sum) in sums.iter().enumerate() {
            p.0[c] = (sum[i] / norm).round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn constant_image_unchanged() {
        let img = Raster::from_pixel(12, 9, Rgb([77, 150, 3]));
        let out = blur(&img, (6, 6)).unwrap();
        assert_eq!(out.as_raw(), img.as_raw());
    }

    #[test]
    fn unit_kernel_is_identity() {
        let img = Raster::from_fn(10, 10, |x, y| Rgb([(x * 25) as u8, (y * 25) as u8, 5]));
        let out = blur(&img, (1, 1)).unwrap();
        assert_eq!(out.as_raw(), img.as_raw());
    }

    #[test]
    fn impulse_response_is_offset_plateau() {
        let mut img = Raster::from_pixel(16, 16, Rgb([0, 0, 0]));
        img.put_pixel(8, 8, Rgb([255, 255, 255]));
        let out = blur(&img, (6, 6)).unwrap();
        let plateau = (255.0f64 / 36.0).round() as u8; // 7
        for y in 0..16u32 {
            for x in 0..16u32 {
                let inside = (6..=11).contains(&x) && (6..=11).contains(&y);
                let expected = if inside { plateau } else { 0 };
                assert_eq!(out.get_pixel(x, y).0[0], expected, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn mean_preserved_on_constant_border_fixture() {
        // constant border wider than the kernel, arbitrary interior
        let img = Raster::from_fn(24, 24, |x, y| {
            if (8..16).contains(&x) && (8..16).contains(&y) {
                Rgb([((x * 37 + y * 101) % 256) as u8, 10, 200])
            } else {
                Rgb([100, 10, 200])
            }
        });
        let out = blur(&img, (6, 6)).unwrap();
        let mean = |im: &Raster| {
            im.pixels().map(|p| p.0[0] as f64).sum::<f64>() / (24.0 * 24.0)
        };
        assert!((mean(&img) - mean(&out)).abs() <= 1.0);
    }
}
