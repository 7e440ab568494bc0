//! Corpus ingestion and the tweet cleaning pipeline.
//!
//! Tweets go through URL removal, lowercasing, mention and hashtag removal,
//! emoji naming and punctuation removal, then are kept only when more than
//! a threshold fraction of their words is found in an English word list.

mod clean;
mod ingest;
mod lexicon;

pub use clean::{clean_tweet, strip_punctuation, Cleaner, PunctuationSet};
pub use ingest::{
    articles_summary, entity_candidates, ingest_articles, read_clean_tweets, read_tweets,
    write_clean_tweets, ArticleDoc, ArticleIngest, HouseSummary, SkippedRecord, TweetIngest,
};
pub use lexicon::{EmojiMap, EnglishDictionary};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::is_emoji_name_token;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("text has no word tokens")]
    EmptyText,
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTweet {
    pub id: String,
    pub text: String,
    pub corpus_tag: String,
}

/// A tweet that survived cleaning and the English-ratio filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanTweet {
    pub id: String,
    pub text: String,
    pub english_ratio: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionTally {
    pub empty: usize,
    pub ratio: usize,
}

impl RejectionTally {
    pub fn total(&self) -> usize {
        self.empty + self.ratio
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<CleanTweet>,
    pub tally: RejectionTally,
}

/// Fraction of whitespace tokens found in `dictionary`. Emoji-name tokens
/// (`:name:`) are left out of both counts.
pub fn english_ratio(text: &str, dictionary: &EnglishDictionary) -> Result<f64, CorpusError> {
    let (hits, total) = text
        .split_whitespace()
        .filter(|t| !is_emoji_name_token(t))
        .fold((0usize, 0usize), |(hits, total), t| {
            (hits + usize::from(dictionary.contains(t)), total + 1)
        });
    if total == 0 {
        return Err(CorpusError::EmptyText);
    }
    Ok(hits as f64 / total as f64)
}

/// Cleans every tweet and keeps those whose English ratio is strictly
/// greater than `threshold`. Tweets with no countable words are tallied
/// under `ratio`.
pub fn filter_tweets(
    raws: &[RawTweet],
    threshold: f64,
    cleaner: &Cleaner,
    dictionary: &EnglishDictionary,
) -> Result<FilterOutcome, CorpusError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CorpusError::InvalidThreshold(threshold));
    }
    let mut outcome = FilterOutcome::default();
    for raw in raws {
        let text = cleaner.clean(&raw.text);
        if text.is_empty() {
            outcome.tally.empty += 1;
            continue;
        }
        match english_ratio(&text, dictionary) {
            Ok(ratio) if ratio > threshold => outcome.kept.push(CleanTweet {
                id: raw.id.clone(),
                text,
                english_ratio: ratio,
            }),
            _ => outcome.tally.ratio += 1,
        }
    }
    Ok(outcome)
}
