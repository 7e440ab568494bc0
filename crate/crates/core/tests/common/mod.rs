#![allow(dead_code)]

use std::path::{Path, PathBuf};

use charprobe::pipeline::{self, LoadedConfig};

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> PathBuf {
    manifest_dir().join("tests/fixtures").join(name)
}

pub fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// Copies the end-to-end fixture into `dir` and loads its config.
pub fn e2e_config(dir: &Path) -> LoadedConfig {
    copy_dir(&fixture("e2e"), dir);
    LoadedConfig::load(&dir.join("run.toml")).unwrap()
}

/// Runs clean, generate, evaluate, import and report in `dir`; returns
/// the report directory.
pub fn run_e2e(dir: &Path) -> PathBuf {
    let cfg = e2e_config(dir);
    pipeline::cmd_clean(&cfg).unwrap();
    pipeline::cmd_generate(&cfg).unwrap();
    pipeline::cmd_evaluate(&cfg).unwrap();
    pipeline::cmd_import_annotations(&cfg, &dir.join("annotations.csv")).unwrap();
    pipeline::cmd_report(&cfg).unwrap();
    cfg.reports_root().join(&cfg.config.run_id)
}

/// File name to bytes for every file in `dir`.
pub fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}
