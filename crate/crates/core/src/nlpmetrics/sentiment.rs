use std::collections::HashSet;
use std::path::Path;
use std::sync::{Arc, LazyLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{parse_sections, read_lexicon_file, MetricsError};
use crate::text::word_tokens;

static BUNDLED: LazyLock<SentimentLexicon> = LazyLock::new(|| {
    SentimentLexicon::parse(include_str!("../../data/sentiment_lexicon.txt"), "bundled")
        .expect("bundled sentiment lexicon parses")
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentLabel {
    pub value: Polarity,
    pub score: f64,
}

/// Positive and negative word sets.
#[derive(Debug, Clone)]
pub struct SentimentLexicon {
    positive: Arc<HashSet<String>>,
    negative: Arc<HashSet<String>>,
}

impl SentimentLexicon {
    pub fn bundled() -> Self {
        BUNDLED.clone()
    }

    /// Parses `[positive]` and `[negative]` sections.
    pub fn parse(text: &str, origin: &str) -> Result<Self, MetricsError> {
        let mut positive = HashSet::new();
        let mut negative = HashSet::new();
        for (section, word) in parse_sections(text, origin)? {
            match section.as_str() {
                "positive" => positive.insert(word),
                "negative" => negative.insert(word),
                other => {
                    return Err(MetricsError::Lexicon {
                        path: origin.to_string(),
                        reason: format!("unknown section [{other}]"),
                    })
                }
            };
        }
        Ok(Self {
            positive: Arc::new(positive),
            negative: Arc::new(negative),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, MetricsError> {
        Self::parse(&read_lexicon_file(path)?, &path.display().to_string())
    }

    pub fn from_words<'a>(
        positive: impl IntoIterator<Item = &'a str>,
        negative: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        Self {
            positive: Arc::new(positive.into_iter().map(str::to_lowercase).collect()),
            negative: Arc::new(negative.into_iter().map(str::to_lowercase).collect()),
        }
    }

    /// Positive hits minus negative hits over the word tokens.
    pub fn score(&self, text: &str) -> i64 {
        word_tokens(text)
            .iter()
            .map(|t| i64::from(self.positive.contains(t)) - i64::from(self.negative.contains(t)))
            .sum()
    }
}

/// Classifies texts as positive or negative.
pub trait SentimentBackend: Send + Sync {
    /// Names the classifier in report provenance.
    fn tag(&self) -> &str;

    fn classify(&self, texts: &[&str]) -> Result<Vec<SentimentLabel>, MetricsError>;
}

/// Lexicon hit counting. A score of zero is labeled with `tie`.
#[derive(Debug, Clone)]
pub struct LexiconSentiment {
    pub lexicon: SentimentLexicon,
    pub tie: Polarity,
}

impl Default for LexiconSentiment {
    fn default() -> Self {
        Self {
            lexicon: SentimentLexicon::bundled(),
            tie: Polarity::Positive,
        }
    }
}

impl LexiconSentiment {
    pub fn new(lexicon: SentimentLexicon) -> Self {
        Self {
            lexicon,
            tie: Polarity::Positive,
        }
    }

    pub fn sentiment(&self, text: &str) -> Result<SentimentLabel, MetricsError> {
        if text.trim().is_empty() {
            return Err(MetricsError::EmptyText);
        }
        let score = self.lexicon.score(text);
        let value = match score {
            s if s > 0 => Polarity::Positive,
            s if s < 0 => Polarity::Negative,
            _ => self.tie,
        };
        Ok(SentimentLabel {
            value,
            score: score as f64,
        })
    }
}

impl SentimentBackend for LexiconSentiment {
    fn tag(&self) -> &str {
        "lexicon"
    }

    fn classify(&self, texts: &[&str]) -> Result<Vec<SentimentLabel>, MetricsError> {
        texts.iter().map(|t| self.sentiment(t)).collect()
    }
}

/// Body of `POST {endpoint}/classify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub texts: Vec<String>,
}

/// Answer of `POST {endpoint}/classify`: one label per text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub labels: Vec<Polarity>,
}

/// Remote classifier. Labels carry a score of +1 or -1.
#[derive(Debug, Clone)]
pub struct RemoteClassifier {
    pub endpoint: String,
    client: reqwest::blocking::Client,
}

impl RemoteClassifier {
    pub fn new(endpoint: &str, timeout: Duration) -> Result<Self, MetricsError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| MetricsError::BackendUnreachable {
                endpoint: endpoint.to_string(),
                reason: e.to_string(),
            })?;
        Ok(Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            client,
        })
    }
}

impl SentimentBackend for RemoteClassifier {
    fn tag(&self) -> &str {
        &self.endpoint
    }

    fn classify(&self, texts: &[&str]) -> Result<Vec<SentimentLabel>, MetricsError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(MetricsError::EmptyText);
        }
        let unreachable = |reason: String| MetricsError::BackendUnreachable {
            endpoint: self.endpoint.clone(),
            reason,
        };
        let body = ClassifyRequest {
            texts: texts.iter().map(|t| t.to_string()).collect(),
        };
        let resp = self
            .client
            .post(format!("{}/classify", self.endpoint))
            .json(&body)
            .send()
            .map_err(|e| unreachable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(unreachable(format!("status {}", resp.status())));
        }
        let text = resp.text().map_err(|e| unreachable(e.to_string()))?;
        let parsed: ClassifyResponse =
            serde_json::from_str(&text).map_err(|e| MetricsError::MalformedResponse(e.to_string()))?;
        if parsed.labels.len() != texts.len() {
            return Err(MetricsError::MalformedResponse(format!(
                "{} labels for {} texts",
                parsed.labels.len(),
                texts.len()
            )));
        }
        Ok(parsed
            .labels
            .into_iter()
            .map(|value| SentimentLabel {
                value,
                score: if value == Polarity::Positive { 1.0 } else { -1.0 },
            })
            .collect())
    }
}
