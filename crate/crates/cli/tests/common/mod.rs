//! Helpers shared by the CLI integration suites.
#![allow(dead_code)] // each test target compiles its own copy

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_detfuse"))
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn detfuse");
    assert!(
        out.status.success(),
        "command failed ({:?}):\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .expect("fixtures directory exists")
}

/// A small self-matching dataset: ground truth and identical predictions.
pub fn write_self_eval_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let gt = dir.join("gt.json");
    let pred = dir.join("pred.json");
    std::fs::write(
        &gt,
        r#"{
  "schema": "detfuse/1",
  "images": [
    {"id": "a", "file_name": "a.png", "width": 100, "height": 100},
    {"id": "b", "file_name": "b.png", "width": 100, "height": 100}
  ],
  "annotations": [
    {"image_id": "a", "category_id": 1, "bbox": [10, 10, 30, 20]},
    {"image_id": "a", "category_id": 2, "bbox": [50, 40, 20, 30]},
    {"image_id": "b", "category_id": 1, "bbox": [5, 5, 40, 40]}
  ],
  "categories": [{"id": 1, "name": "ascaris"}, {"id": 2, "name": "trichuris"}]
}
"#,
    )
    .unwrap();
    std::fs::write(
        &pred,
        r#"{
  "schema": "detfuse/1",
  "source_id": "oracle",
  "images": [
    {"id": "a", "width": 100, "height": 100},
    {"id": "b", "width": 100, "height": 100}
  ],
  "categories": [{"id": 1, "name": "ascaris"}, {"id": 2, "name": "trichuris"}],
  "results": [
    {"image_id": "a", "category_id": 1, "bbox": [10, 10, 30, 20], "score": 1.0},
    {"image_id": "a", "category_id": 2, "bbox": [50, 40, 20, 30], "score": 1.0},
    {"image_id": "b", "category_id": 1, "bbox": [5, 5, 40, 40], "score": 1.0}
  ]
}
"#,
    )
    .unwrap();
    (gt, pred)
}
