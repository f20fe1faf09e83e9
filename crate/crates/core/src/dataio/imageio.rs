//! Image codec boundary (PNG and JPEG via the `image` crate).

use std::path::{Path, PathBuf};

use crate::augment::Raster;
use crate::error::Result;

pub fn load_raster(path: impl AsRef<Path>) -> Result<Raster> {
    Ok(image::open(path.as_ref())?.to_rgb8())
}

/// Save by extension; PNG is the lossless choice for golden outputs.
pub fn save_raster(img: &Raster, path: impl AsRef<Path>) -> Result<()> {
    img.save(path.as_ref())?;
    Ok(())
}

/// All PNG/JPEG files directly inside `dir`, sorted by file name.
pub fn list_images(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir.as_ref())? {
        let path = entry?.path();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        if matches!(ext.as_str(), "png" | "jpg" | "jpeg") && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
