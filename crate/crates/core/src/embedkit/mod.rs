//! Sentence embeddings and centroid distances between output sets.
//!
//! Vectors come from an [`EmbeddingBackend`]: the HTTP client
//! [`HttpEmbedder`] for `POST {endpoint}/embed`, or the deterministic
//! [`HashEmbedder`] that needs no model. [`VectorCache`] stores vectors by
//! backend tag and text hash so repeated runs skip the backend.

mod backends;
mod cache;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backends::{EmbedRequest, EmbedResponse, HashEmbedder, HttpEmbedder};
pub use cache::{CachedEmbedder, VectorCache};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("nothing to embed")]
    EmptyInput,
    #[error("embedding backend {endpoint} unreachable: {reason}")]
    BackendUnreachable { endpoint: String, reason: String },
    #[error("malformed embedding response: {0}")]
    MalformedResponse(String),
    #[error("vector dimension {found} differs from {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{vectors} vectors returned for {texts} texts")]
    CountMismatch { texts: usize, vectors: usize },
    #[error("vector has a non-finite component")]
    NonFinite,
    #[error("vector set is empty")]
    EmptySet,
    #[error("centroid is the zero vector, cosine distance is undefined")]
    ZeroCentroid,
    #[error("cache {path}: {reason}")]
    Cache { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    /// Tag of the backend that produced the vector.
    pub source: String,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>, source: &str) -> Self {
        Self {
            values,
            source: source.to_string(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Produces one vector per text.
pub trait EmbeddingBackend: Send + Sync {
    fn tag(&self) -> &str;

    fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Embeds `texts`, checking that the backend answered one finite vector
/// per text and that all share one dimension.
pub fn embed(backend: &dyn EmbeddingBackend, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
    if texts.is_empty() {
        return Err(EmbedError::EmptyInput);
    }
    let raw = backend.embed_raw(texts)?;
    if raw.len() != texts.len() {
        return Err(EmbedError::CountMismatch {
            texts: texts.len(),
            vectors: raw.len(),
        });
    }
    check_uniform(raw.iter().map(Vec::as_slice))?;
    Ok(raw
        .into_iter()
        .map(|values| EmbeddingVector::new(values, backend.tag()))
        .collect())
}

/// Returns the shared dimension of non-empty, finite vectors.
pub fn check_uniform<'a>(vectors: impl IntoIterator<Item = &'a [f64]>) -> Result<usize, EmbedError> {
    let mut dim = None;
    for v in vectors {
        let expected = *dim.get_or_insert(v.len());
        if v.len() != expected {
            return Err(EmbedError::DimensionMismatch {
                expected,
                found: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
    }
    match dim {
        None => Err(EmbedError::EmptySet),
        Some(0) => Err(EmbedError::DimensionMismatch { expected: 1, found: 0 }),
        Some(d) => Ok(d),
    }
}

/// Component-wise mean.
pub fn centroid(vectors: &[&[f64]]) -> Result<Vec<f64>, EmbedError> {
    let dim = check_uniform(vectors.iter().copied())?;
    let mut sum = vec![0.0; dim];
    for v in vectors {
        for (s, x) in sum.iter_mut().zip(v.iter()) {
            *s += x;
        }
    }
    let n = vectors.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// Distance between two centroids.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `1 - cos(a, b)`, in `[0, 2]`.
    #[default]
    Cosine,
    Euclidean,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> Result<f64, EmbedError> {
        if a.len() != b.len() {
            return Err(EmbedError::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        match self {
            Metric::Euclidean => Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()),
            Metric::Cosine => {
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    return Err(EmbedError::ZeroCentroid);
                }
                if a == b {
                    return Ok(0.0);
                }
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                Ok((1.0 - dot / (na * nb)).clamp(0.0, 2.0))
            }
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

/// Distance between the centroids of two vector sets.
pub fn centroid_distance(a: &[&[f64]], b: &[&[f64]], metric: Metric) -> Result<f64, EmbedError> {
    if a.is_empty() || b.is_empty() {
        return Err(EmbedError::EmptySet);
    }
    metric.distance(&centroid(a)?, &centroid(b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[[f64; 2]]) -> Vec<&[f64]> {
        points.iter().map(|p| p.as_slice()).collect()
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(centroid(&set(&[[0.0, 0.0], [2.0, 2.0]])).unwrap(), [1.0, 1.0]);
        assert_eq!(centroid(&set(&[[3.0, -1.0]])).unwrap(), [3.0, -1.0]);
        assert_eq!(
            centroid(&set(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])).unwrap(),
            [0.0, 0.0]
        );
        assert_eq!(centroid(&[]), Err(EmbedError::EmptySet));
        assert!(matches!(
            centroid(&[[1.0].as_slice(), [1.0, 2.0].as_slice()]),
            Err(EmbedError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn distance_examples() {
        let a = [[0.3, 0.4], [0.5, 0.1]];
        assert_eq!(centroid_distance(&set(&a), &set(&a), Metric::Cosine).unwrap(), 0.0);
        assert_eq!(centroid_distance(&set(&a), &set(&a), Metric::Euclidean).unwrap(), 0.0);
        let d = centroid_distance(&set(&[[1.0, 0.0]]), &set(&[[0.0, 1.0]]), Metric::Cosine).unwrap();
        assert_eq!(d, 1.0);
        let d = centroid_distance(&set(&[[1.0, 0.0]]), &set(&[[-1.0, 0.0]]), Metric::Cosine).unwrap();
        assert_eq!(d, 2.0);
        let d = centroid_distance(&set(&[[0.0, 0.0]]), &set(&[[3.0, 4.0]]), Metric::Euclidean).unwrap();
        assert_eq!(d, 5.0);
        assert_eq!(
            centroid_distance(&set(&[[1.0, 0.0], [-1.0, 0.0]]), &set(&[[0.0, 1.0]]), Metric::Cosine),
            Err(EmbedError::ZeroCentroid)
        );
        assert_eq!(centroid_distance(&[], &set(&[[0.0, 1.0]]), Metric::Cosine), Err(EmbedError::EmptySet));
    }

    #[test]
    fn embed_checks_backend_output() {
        struct Ragged;
        impl EmbeddingBackend for Ragged {
            fn tag(&self) -> &str {
                "ragged"
            }
            fn embed_raw(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
                Ok(texts.iter().enumerate().map(|(i, _)| vec![0.5; i + 1]).collect())
            }
        }
        assert!(matches!(embed(&Ragged, &["a", "b"]), Err(EmbedError::DimensionMismatch { .. })));
        assert_eq!(embed(&Ragged, &[]), Err(EmbedError::EmptyInput));
        let out = embed(&HashEmbedder::default(), &["a", "b"]).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].dim(), out[1].dim());
    }

    proptest::proptest! {
        #[test]
        fn distance_properties(
            a in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 1..6),
            b in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 1..6),
        ) {
            let a: Vec<&[f64]> = a.iter().map(Vec::as_slice).collect();
            let b: Vec<&[f64]> = b.iter().map(Vec::as_slice).collect();
            for metric in [Metric::Cosine, Metric::Euclidean] {
                let (Ok(ab), Ok(ba)) = (centroid_distance(&a, &b, metric), centroid_distance(&b, &a, metric)) else {
                    continue;
                };
                proptest::prop_assert_eq!(ab, ba);
                proptest::prop_assert!(ab >= 0.0);
                if metric == Metric::Cosine {
                    proptest::prop_assert!(ab <= 2.0);
                }
            }
        }
    }
}
