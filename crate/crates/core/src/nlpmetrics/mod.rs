//! Per-text sentiment and adjective extraction, and the per-group tables
//! built from them.
//!
//! The bundled defaults are lexicon based and deterministic. Both metrics
//! sit behind traits ([`SentimentBackend`], [`AdjectiveTagger`]) so a
//! stronger classifier or tagger can be plugged in; [`RemoteClassifier`]
//! speaks the `POST {endpoint}/classify` protocol.

mod adjectives;
mod sentiment;
mod tables;

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

pub use adjectives::{AdjTag, AdjectiveLexicon, AdjectiveSet, AdjectiveTagger, LexiconTagger};
pub use sentiment::{
    ClassifyRequest, ClassifyResponse, LexiconSentiment, Polarity, RemoteClassifier, SentimentBackend,
    SentimentLabel, SentimentLexicon,
};
pub use tables::{
    adjective_presence_table, entity_source_sentiment_table, sentiment_ratio_table, PresenceRow, SentimentGrid,
    SentimentRow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("text is empty")]
    EmptyText,
    #[error("group {0:?} is empty")]
    EmptyGroup(String),
    #[error("no groups")]
    NoGroups,
    #[error("lexicon {path}: {reason}")]
    Lexicon { path: String, reason: String },
    #[error("classifier {endpoint} unreachable: {reason}")]
    BackendUnreachable { endpoint: String, reason: String },
    #[error("malformed classifier response: {0}")]
    MalformedResponse(String),
}

/// Parses a word list with `[section]` headers and `#` comments into
/// `(section, word)` pairs, lowercasing words.
pub(crate) fn parse_sections(text: &str, origin: &str) -> Result<Vec<(String, String)>, MetricsError> {
    let mut section: Option<String> = None;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(name.trim().to_string());
            continue;
        }
        let Some(s) = &section else {
            return Err(MetricsError::Lexicon {
                path: origin.to_string(),
                reason: format!("line {}: word before any section header", i + 1),
            });
        };
        out.push((s.clone(), line.to_lowercase()));
    }
    Ok(out)
}

pub(crate) fn read_lexicon_file(path: &Path) -> Result<String, MetricsError> {
    std::fs::read_to_string(path).map_err(|e| MetricsError::Lexicon {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Groups items by key, keeping keys in first-appearance order.
pub fn group_by<T, K: Into<String>>(items: impl IntoIterator<Item = (K, T)>) -> Vec<(String, Vec<T>)> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<(String, Vec<T>)> = Vec::new();
    for (k, v) in items {
        let k = k.into();
        let i = *index.entry(k.clone()).or_insert_with(|| {
            groups.push((k, Vec::new()));
            groups.len() - 1
        });
        groups[i].1.push(v);
    }
    groups
}
