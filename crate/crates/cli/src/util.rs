//! Shared CLI plumbing: atomic writes and versioned config loading.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;

/// Write through a temp file in the same directory, then rename, so an
/// interrupted run never leaves a truncated artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(parent)
        .with_context(|| format!("creating {}", parent.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent)
        .with_context(|| format!("temp file in {}", parent.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Load a JSON config, accepting an optional `"schema": "detfuse/..."` tag.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    if let Some(schema) = value.get("schema").and_then(|v| v.as_str()) {
        if !schema.starts_with("detfuse/") {
            bail!("{}: unsupported schema {:?}", path.display(), schema);
        }
    }
    serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))
}

/// Parse an IoU threshold spec: `0.5`, `0.5,0.75`, or `0.5:0.95:0.05`.
pub fn parse_iou_thresholds(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let thresholds = match parts.as_slice() {
        [single] => single
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(Into::into))
            .collect::<Result<Vec<f64>>>()?,
        [start, stop, step] => {
            let (start, stop, step) = (
                start.parse::<f64>()?,
                stop.parse::<f64>()?,
                step.parse::<f64>()?,
            );
            if step <= 0.0 || stop < start {
                bail!("bad threshold range {spec:?}");
            }
            let mut out = Vec::new();
            let mut i = 0;
            loop {
                let t = start + step * i as f64;
                if t > stop + 1e-9 {
                    break;
                }
                out.push((t * 1e9).round() / 1e9);
                i += 1;
            }
            out
        }
        _ => bail!("bad threshold spec {spec:?}"),
    };
    if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        bail!("thresholds must lie in (0,1]: {spec:?}");
    }
    Ok(thresholds)
}

/// Parse `name=w,name=w` source-weight lists.
pub fn parse_weights(spec: &str) -> Result<std::collections::BTreeMap<String, f64>> {
    let mut out = std::collections::BTreeMap::new();
    for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
        let Some((name, w)) = part.split_once('=') else {
            bail!("bad weight entry {part:?}, expected name=value");
        };
        out.insert(name.trim().to_string(), w.trim().parse::<f64>()?);
    }
    Ok(out)
}
