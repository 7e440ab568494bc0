//! Starts the annotation service on a fixture run and submits a label.
//!
//! Usage: `cargo run --example annotation_server [work_dir]`

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use charprobe::pipeline::{self, LoadedConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("charprobe-annotation-server"));
    std::fs::create_dir_all(&work)?;
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e");
    for entry in std::fs::read_dir(fixture)? {
        let entry = entry?;
        std::fs::copy(entry.path(), work.join(entry.file_name()))?;
    }
    let cfg = LoadedConfig::load(&work.join("run.toml"))?;
    pipeline::cmd_clean(&cfg)?;
    pipeline::cmd_generate(&cfg)?;
    pipeline::cmd_evaluate(&cfg)?;

    let (server, state) = pipeline::cmd_serve(&cfg, Some(SocketAddr::from(([127, 0, 0, 1], 0))))?;
    let url = server.url();
    println!("serving {url}/api for run {}", state.run_id);
    let client = reqwest::blocking::Client::new();
    let tasks: serde_json::Value = client.get(format!("{url}/api/tasks?annotator=demo&limit=1")).send()?.json()?;
    let id = tasks[0]["entailment_id"].as_str().ok_or("no tasks")?;
    let body = serde_json::json!({"entailment_id": id, "annotator_id": "demo", "relevant": true, "characterizing": false});
    let stored: serde_json::Value = client.post(format!("{url}/api/labels")).json(&body).send()?.json()?;
    println!("stored {stored}");
    println!("stats {}", client.get(format!("{url}/api/stats")).send()?.text()?);
    server.shutdown()?;
    Ok(())
}
