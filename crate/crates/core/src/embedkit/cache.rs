use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{check_uniform, EmbedError, EmbeddingBackend};

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    vector: Vec<f64>,
}

fn text_key(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Vectors keyed by (backend tag, SHA-256 of text). Each tag has one
/// append-only file `{dir}/{sha256(tag)}.jsonl`.
#[derive(Debug)]
pub struct VectorCache {
    path: PathBuf,
    entries: Mutex<HashMap<String, Vec<f64>>>,
}

impl VectorCache {
    pub fn open(dir: &Path, tag: &str) -> Result<Self, EmbedError> {
        let err = |path: &Path, e: &dyn std::fmt::Display| EmbedError::Cache {
            path: path.display().to_string(),
            reason: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| err(dir, &e))?;
        let path = dir.join(format!("{}.jsonl", text_key(tag)));
        let mut entries = HashMap::new();
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| err(&path, &e))?;
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let parsed: CacheLine = serde_json::from_str(line).map_err(|e| err(&path, &e))?;
                entries.insert(parsed.key, parsed.vector);
            }
        }
        Ok(Self {
            path,
            entries: Mutex::new(entries),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, text: &str) -> Option<Vec<f64>> {
        self.entries.lock().unwrap().get(&text_key(text)).cloned()
    }

    pub fn put_all(&self, items: &[(&str, &[f64])]) -> Result<(), EmbedError> {
        let mut entries = self.entries.lock().unwrap();
        let mut lines = String::new();
        for (text, vector) in items {
            let key = text_key(text);
            if entries.contains_key(&key) {
                continue;
            }
            lines.push_str(
                &serde_json::to_string(&CacheLine {
                    key: key.clone(),
                    vector: vector.to_vec(),
                })
                .expect("cache lines serialize"),
            );
            lines.push('\n');
            entries.insert(key, vector.to_vec());
        }
        if lines.is_empty() {
            return Ok(());
        }
        let err = |e: std::io::Error| EmbedError::Cache {
            path: self.path.display().to_string(),
            reason: e.to_string(),
        };
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path).map_err(err)?;
        file.write_all(lines.as_bytes()).map_err(err)
    }
}

/// A backend behind a [`VectorCache`]: only texts missing from the cache
/// reach the backend.
pub struct CachedEmbedder<'a> {
    pub backend: &'a dyn EmbeddingBackend,
    pub cache: VectorCache,
}

impl<'a> CachedEmbedder<'a> {
    pub fn open(backend: &'a dyn EmbeddingBackend, dir: &Path) -> Result<Self, EmbedError> {
        Ok(Self {
            cache: VectorCache::open(dir, backend.tag())?,
            backend,
        })
    }
}

impl EmbeddingBackend for CachedEmbedder<'_> {
    fn tag(&self) -> &str {
        self.backend.tag()
    }

    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let mut out: Vec<Option<Vec<f64>>> = texts.iter().map(|t| self.cache.get(t)).collect();
        let mut missing: Vec<&str> = Vec::new();
        for (t, v) in texts.iter().zip(&out) {
            if v.is_none() && !missing.contains(t) {
                missing.push(t);
            }
        }
        if !missing.is_empty() {
            let fresh = self.backend.embed_raw(&missing)?;
            if fresh.len() != missing.len() {
                return Err(EmbedError::CountMismatch {
                    texts: missing.len(),
                    vectors: fresh.len(),
                });
            }
            check_uniform(fresh.iter().map(Vec::as_slice))?;
            let items: Vec<(&str, &[f64])> = missing.iter().copied().zip(fresh.iter().map(Vec::as_slice)).collect();
            self.cache.put_all(&items)?;
            for (t, v) in texts.iter().zip(out.iter_mut()) {
                if v.is_none() {
                    *v = self.cache.get(t);
                }
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled from cache")).collect())
    }
}
