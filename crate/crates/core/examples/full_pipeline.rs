//! Runs every pipeline command on a copy of the bundled end-to-end fixture.
//!
//! Usage: `cargo run --example full_pipeline [work_dir]`

use std::path::{Path, PathBuf};

use charprobe::pipeline::{self, LoadedConfig};

fn copy_dir(from: &Path, to: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(to)?;
    for entry in std::fs::read_dir(from)? {
        let entry = entry?;
        std::fs::copy(entry.path(), to.join(entry.file_name()))?;
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("charprobe-full-pipeline"));
    copy_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e"), &work)?;
    let cfg = LoadedConfig::load(&work.join("run.toml"))?;

    let clean = pipeline::cmd_clean(&cfg)?;
    println!("clean: kept {} of {}", clean.kept, clean.input);
    let generated = pipeline::cmd_generate(&cfg)?;
    for m in &generated.manifests {
        let fails: usize = m.prompts.iter().map(|p| p.fail_count).sum();
        println!("generate {}: {} prompts, {} failed attempts", m.model_tag, m.prompts.len(), fails);
    }
    let eval = pipeline::cmd_evaluate(&cfg)?;
    println!("evaluate: {} entailments", eval.items.len());
    let imported = pipeline::cmd_import_annotations(&cfg, &work.join("annotations.csv"))?;
    println!("annotations: {} labels from {:?}", imported.imported, imported.annotators);
    let report = pipeline::cmd_report(&cfg)?;
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
