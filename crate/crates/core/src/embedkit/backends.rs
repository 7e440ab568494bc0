use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbedError, EmbeddingBackend};
use crate::text::word_tokens;

/// Deterministic embedding without a model: each word token maps to a
/// pseudo-random vector drawn from a seeded hash, and a text is the mean
/// of its token vectors. Texts sharing words end up close together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
    tag: String,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(16, 0)
    }
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim: dim.max(1),
            seed,
            tag: format!("hash-d{}-s{seed}", dim.max(1)),
        }
    }

    fn token_vector(&self, token: &str, out: &mut [f64]) {
        let mut block = 0u32;
        let mut filled = 0;
        while filled < out.len() {
            let mut h = Sha256::new();
            h.update(self.seed.to_le_bytes());
            h.update(block.to_le_bytes());
            h.update(token.as_bytes());
            for chunk in h.finalize().chunks_exact(4) {
                if filled == out.len() {
                    break;
                }
                let x = u32::from_le_bytes(chunk.try_into().unwrap());
                out[filled] += f64::from(x) / f64::from(u32::MAX) * 2.0 - 1.0;
                filled += 1;
            }
            block += 1;
        }
    }

    pub fn vector(&self, text: &str) -> Vec<f64> {
        let mut tokens = word_tokens(text);
        if tokens.is_empty() {
            tokens.push(text.to_string());
        }
        let mut v = vec![0.0; self.dim];
        for t in &tokens {
            self.token_vector(t, &mut v);
        }
        let n = tokens.len() as f64;
        v.iter_mut().for_each(|x| *x /= n);
        v
    }
}

impl EmbeddingBackend for HashEmbedder {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// Body of `POST {endpoint}/embed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

/// Answer of `POST {endpoint}/embed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
}

/// Remote embedding backend. Texts are sent in batches of `batch_size`.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    pub endpoint: String,
    pub tag: String,
    pub batch_size: usize,
    client: reqwest::blocking::Client,
}

impl HttpEmbedder {
    pub fn new(endpoint: &str, tag: &str, timeout: Duration) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EmbedError::BackendUnreachable {
                endpoint: endpoint.to_string(),
                reason: e.to_string(),
            })?;
        Ok(Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            tag: tag.to_string(),
            batch_size: 64,
            client,
        })
    }

    fn batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let unreachable = |reason: String| EmbedError::BackendUnreachable {
            endpoint: self.endpoint.clone(),
            reason,
        };
        let body = EmbedRequest {
            texts: texts.iter().map(|t| t.to_string()).collect(),
        };
        let resp = self
            .client
            .post(format!("{}/embed", self.endpoint))
            .json(&body)
            .send()
            .map_err(|e| unreachable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(unreachable(format!("status {}", resp.status())));
        }
        let text = resp.text().map_err(|e| unreachable(e.to_string()))?;
        let parsed: EmbedResponse =
            serde_json::from_str(&text).map_err(|e| EmbedError::MalformedResponse(e.to_string()))?;
        Ok(parsed.vectors)
    }
}

impl EmbeddingBackend for HttpEmbedder {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.batch_size.max(1)) {
            let vectors = self.batch(chunk)?;
            if vectors.len() != chunk.len() {
                return Err(EmbedError::CountMismatch {
                    texts: chunk.len(),
                    vectors: vectors.len(),
                });
            }
            out.extend(vectors);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_vectors_are_deterministic() {
        let e = HashEmbedder::default();
        assert_eq!(e.vector("kind man"), e.vector("kind man"));
        assert_eq!(e.vector("kind man").len(), 16);
        assert_ne!(e.vector("kind man"), e.vector("cruel man"));
        assert_ne!(HashEmbedder::new(16, 1).vector("x"), e.vector("x"));
        assert_eq!(HashEmbedder::new(40, 0).vector("x").len(), 40);
        assert!(e.vector("").iter().all(|x| x.is_finite()));
    }

    #[test]
    fn shared_words_pull_vectors_together() {
        let e = HashEmbedder::new(64, 3);
        let d = |a: &str, b: &str| super::super::Metric::Euclidean.distance(&e.vector(a), &e.vector(b)).unwrap();
        assert!(d("kind generous man", "kind generous woman") < d("kind generous man", "tax budget policy"));
    }

    #[test]
    fn unreachable_endpoint() {
        let h = HttpEmbedder::new("http://127.0.0.1:1", "remote", Duration::from_secs(2)).unwrap();
        assert!(matches!(h.embed_raw(&["a"]), Err(EmbedError::BackendUnreachable { .. })));
    }
}
