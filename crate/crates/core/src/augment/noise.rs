//! Synthetic interference: Gaussian noise, salt-and-pepper, atmospheric fog.
//!
//! All three are pure functions of (image, params, seed); the generator is
//! ChaCha8 (see [`crate::rng`]). The fog depth field is a hash-based value
//! noise, so it needs no sampling stream at all and is reproducible down to
//! the lattice values.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, splitmix64, unit_from_hash};

use super::Raster;

/// Additive Gaussian noise on unit-normalized intensities.
///
/// Each 8-bit sample `s` becomes `round(clamp(s/255 + N(mean, std), 0, 1) * 255)`;
/// every channel draws independently, in buffer order.
pub fn gaussian_noise(img: &Raster, mean: f64, std: f64, seed: u64) -> Result<Raster> {
    if std < 0.0 || !std.is_finite() {
        return Err(Error::InvalidParam(format!(
            "gaussian_noise std must be >= 0, got {std}"
        )));
    }
    let normal = Normal::new(mean, std)
        .map_err(|e| Error::InvalidParam(format!("gaussian_noise distribution: {e}")))?;
    let mut rng = rng_from_seed(seed);
    let mut buf = img.as_raw().clone();
    for s in buf.iter_mut() {
        let v = *s as f64 / 255.0 + normal.sample(&mut rng);
        *s = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    }
    Ok(Raster::from_raw(img.width(), img.height(), buf).expect("buffer size preserved"))
}

/// Impulse noise: exactly `number` distinct pixel positions, sampled
/// uniformly without replacement by a partial Fisher-Yates shuffle, each set
/// to pure black or pure white with equal probability.
///
/// Draw order per affected pixel: position first, then color.
pub fn salt_pepper(img: &Raster, number: u64, seed: u64) -> Result<Raster> {
    let pixels = img.width() as u64 * img.height() as u64;
    if number > pixels {
        return Err(Error::TooManyNoisePixels { number, pixels });
    }
    if pixels > u32::MAX as u64 {
        return Err(Error::InvalidParam(
            "salt_pepper supports at most 2^32-1 pixels".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let n = pixels as usize;
    let mut indices: Vec<u32> = (0..n as u32).collect();
    let mut buf = img.as_raw().clone();
    for t in 0..number as usize {
        let j = t + rng.random_range(0..n - t);
        indices.swap(t, j);
        let p = indices[t] as usize * 3;
        let v = if rng.random_bool(0.5) { 255u8 } else { 0u8 };
        buf[p] = v;
        buf[p + 1] = v;
        buf[p + 2] = v;
    }
    Ok(Raster::from_raw(img.width(), img.height(), buf).expect("buffer size preserved"))
}

// Depth field bounds, in arbitrary scene units. The lower bound keeps the
// transmittance strictly below 1 so the full-fog limit reaches the airlight.
const FOG_DEPTH_MIN: f64 = 10.0;
const FOG_DEPTH_SPAN: f64 = 40.0;
const FOG_OCTAVES: u32 = 4;

fn lattice_value(seed: u64, octave: u64, ix: u64, iy: u64) -> f64 {
    let mut h = splitmix64(seed ^ 0xF06);
    h = splitmix64(h ^ octave);
    h = splitmix64(h ^ ix);
    h = splitmix64(h ^ iy);
    unit_from_hash(h)
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Multi-octave value noise in [0, 1], normalized over octave amplitudes.
fn value_noise_field(w: usize, h: usize, seed: u64) -> Vec<f64> {
    let max_dim = w.max(h) as f64;
    let mut field = vec![0.0f64; w * h];
    let mut total_amp = 0.0;
    for o in 0..FOG_OCTAVES {
        // octave 0 spans the image in about two cells ("size = imagesize")
        let cell = (max_dim / (2u64 << o) as f64).max(1.0);
        let amp = 0.5f64.powi(o as i32);
        total_amp += amp;
        for y in 0..h {
            let v = y as f64 / cell;
            let y0 = v.floor();
            let fy = smoothstep(v - y0);
            let iy = y0 as u64;
            for x in 0..w {
                let u = x as f64 / cell;
                let x0 = u.floor();
                let fx = smoothstep(u - x0);
                let ix = x0 as u64;
                let v00 = lattice_value(seed, o as u64, ix, iy);
                let v10 = lattice_value(seed, o as u64, ix + 1, iy);
                let v01 = lattice_value(seed, o as u64, ix, iy + 1);
                let v11 = lattice_value(seed, o as u64, ix + 1, iy + 1);
                let top = v00 + (v10 - v00) * fx;
                let bottom = v01 + (v11 - v01) * fx;
                field[y * w + x] += amp * (top + (bottom - top) * fy);
            }
        }
    }
    for v in field.iter_mut() {
        *v /= total_amp;
    }
    field
}

fn fog_blend(img: &Raster, brightness: f64, concentration: f64, depth: &[f64]) -> Raster {
    let airlight = brightness * 255.0;
    let (w, h) = img.dimensions();
    let mut out = Raster::new(w, h);
    for (i, (src, dst)) in img.pixels().zip(out.pixels_mut()).enumerate() {
        let t = (-concentration * depth[i]).exp();
        for c in 0..3 {
            let v = src.0[c] as f64 * t + airlight * (1.0 - t);
            dst.0[c] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

fn validate_fog(brightness: f64, concentration: f64) -> Result<()> {
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
    Ok(())
}

/// Atmospheric-scattering fog: `out = img*t + A*(1-t)` per pixel with
/// `A = brightness*255` and `t = exp(-concentration * d(p))`, where `d(p)`
/// is a seeded multi-octave value-noise depth field spanning the full image,
/// ranging over `[10, 50]` scene units.
pub fn fog(img: &Raster, brightness: f64, concentration: f64, seed: u64) -> Result<Raster> {
    validate_fog(brightness, concentration)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Ok(img.clone());
    }
    let depth: Vec<f64> = value_noise_field(w, h, seed)
        .into_iter()
        .map(|n| FOG_DEPTH_MIN + FOG_DEPTH_SPAN * n)
        .collect();
    Ok(fog_blend(img, brightness, concentration, &depth))
}

/// Fog with a constant depth everywhere; analytic companion of [`fog`] for
/// closed-form checks.
pub fn fog_uniform(img: &Raster, brightness: f64, concentration: f64, depth: f64) -> Result<Raster> {
    validate_fog(brightness, concentration)?;
    if depth < 0.0 || !depth.is_finite() {
        return Err(Error::InvalidParam(format!(
            "fog depth must be >= 0, got {depth}"
        )));
    }
    let n = img.width() as usize * img.height() as usize;
    Ok(fog_blend(img, brightness, concentration, &vec![depth; n]))
}
