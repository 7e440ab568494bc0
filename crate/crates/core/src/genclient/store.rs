//! Append-only entailment store: one JSON record per line plus a manifest.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;

use super::{Entailment, RunManifest};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed { path: PathBuf, line: usize, reason: String },
    #[error("model tag {0:?} must be non-empty and use only letters, digits, '.', '_' or '-'")]
    BadTag(String),
}

pub(crate) fn check_tag(tag: &str) -> Result<(), StoreError> {
    let ok = !tag.is_empty()
        && tag
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::BadTag(tag.to_string()))
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Entailments of one model tag under a directory:
/// `{tag}.entailments.jsonl` and `{tag}.manifest.json`.
#[derive(Debug)]
pub struct EntailmentStore {
    dir: PathBuf,
    tag: String,
    file: Mutex<BufWriter<File>>,
}

impl EntailmentStore {
    /// Starts an empty store, replacing any previous one for `tag`.
    pub fn create(dir: &Path, tag: &str) -> Result<Self, StoreError> {
        Self::open_with(dir, tag, true)
    }

    /// Opens a store for appending.
    pub fn open(dir: &Path, tag: &str) -> Result<Self, StoreError> {
        Self::open_with(dir, tag, false)
    }

    fn open_with(dir: &Path, tag: &str, truncate: bool) -> Result<Self, StoreError> {
        check_tag(tag)?;
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let path = dir.join(format!("{tag}.entailments.jsonl"));
        let file = OpenOptions::new()
            .create(true)
            .append(!truncate)
            .write(true)
            .truncate(truncate)
            .open(&path)
            .map_err(io(&path))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            tag: tag.to_string(),
            file: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn entailments_path(&self) -> PathBuf {
        self.dir.join(format!("{}.entailments.jsonl", self.tag))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join(format!("{}.manifest.json", self.tag))
    }

    /// Appends records and flushes them as one unit.
    pub fn append_all(&self, records: &[Entailment]) -> Result<(), StoreError> {
        let path = self.entailments_path();
        let mut file = self.file.lock().unwrap();
        for r in records {
            let line = serde_json::to_string(r).expect("entailments serialize");
            writeln!(file, "{line}").map_err(io(&path))?;
        }
        file.flush().map_err(io(&path))
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<(), StoreError> {
        let path = self.manifest_path();
        let mut text = serde_json::to_string_pretty(manifest).expect("manifests serialize");
        text.push('\n');
        std::fs::write(&path, text).map_err(io(&path))
    }
}

pub fn read_entailments(path: &Path) -> Result<Vec<Entailment>, StoreError> {
    let file = File::open(path).map_err(io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| StoreError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, StoreError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| StoreError::Malformed {
        path: path.to_path_buf(),
        line: e.line(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genclient::Reason;

    fn record(i: usize) -> Entailment {
        Entailment {
            id: Entailment::make_id("m", 0, i),
            prompt_ref: "p|Jane".into(),
            template_id: "p".into(),
            prompt_index: 0,
            text: format!("text {i}"),
            model_tag: "m".into(),
            attempt_index: i,
            seed: Some(7),
            valid: i.is_multiple_of(2),
            reason: if i.is_multiple_of(2) { Reason::Valid } else { Reason::Empty },
        }
    }

    #[test]
    fn append_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let store = EntailmentStore::create(dir.path(), "m").unwrap();
        store.append_all(&[record(1), record(2)]).unwrap();
        drop(store);
        let store = EntailmentStore::open(dir.path(), "m").unwrap();
        store.append_all(&[record(3)]).unwrap();
        let back = read_entailments(&store.entailments_path()).unwrap();
        assert_eq!(back, vec![record(1), record(2), record(3)]);
        drop(store);
        let store = EntailmentStore::create(dir.path(), "m").unwrap();
        assert!(read_entailments(&store.entailments_path()).unwrap().is_empty());
    }

    #[test]
    fn tags_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        assert!(EntailmentStore::create(dir.path(), "a/b").is_err());
        assert!(EntailmentStore::create(dir.path(), "").is_err());
        assert!(EntailmentStore::create(dir.path(), "M_FD-1.0").is_ok());
    }

    #[test]
    fn malformed_lines_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        std::fs::write(&path, format!("{}\nnot json\n", serde_json::to_string(&record(1)).unwrap())).unwrap();
        match read_entailments(&path) {
            Err(StoreError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
