//! k-means clustering of embedding vectors, the distortion, silhouette and
//! Calinski-Harabasz indices, cluster-count selection and crosstabs of
//! clusters against categorical labels.

mod kmeans;
mod scores;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kmeans::{kmeans, kmeans_with, KMeansConfig};
pub use scores::{calinski_harabasz, distortion, silhouette};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("need at least k = {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no vectors")]
    EmptyInput,
    #[error("vector {index} has dimension {found}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("vector {0} has a non-finite component")]
    NonFinite(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("all points are in one cluster")]
    SingleCluster,
    #[error("{labels} labels for {points} points")]
    CoverageGap { labels: usize, points: usize },
    #[error("k range {lo}..={hi} is not within 2..={max}")]
    InvalidRange { lo: usize, hi: usize, max: usize },
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

/// Dimension shared by all vectors.
pub(crate) fn check_vectors(vectors: &[Vec<f64>]) -> Result<usize, ClusterError> {
    let dim = vectors.first().ok_or(ClusterError::EmptyInput)?.len();
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(ClusterError::DimensionMismatch {
                index: i,
                expected: dim,
                found: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ClusterError::NonFinite(i));
        }
    }
    Ok(dim)
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Outcome of one clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub distortion: f64,
    /// `None` when k = 1.
    pub silhouette: Option<f64>,
    /// `None` when k = 1 or n = k.
    pub calinski_harabasz: Option<f64>,
    pub seed: u64,
    /// Lloyd iterations of the kept restart.
    pub iterations: usize,
    pub converged: bool,
}

impl ClusterReport {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Scores of one candidate k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub distortion: f64,
    pub silhouette: f64,
    pub calinski_harabasz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub chosen_k: usize,
    pub per_k: Vec<KScore>,
}

/// Clusters with every k in `k_range` and picks the k with the highest
/// silhouette; ties go to the smaller k.
pub fn select_k(
    vectors: &[Vec<f64>],
    k_range: std::ops::RangeInclusive<usize>,
    restarts: usize,
    seed: u64,
) -> Result<KSelection, ClusterError> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    let max = vectors.len().saturating_sub(1);
    if lo < 2 || hi < lo || hi > max {
        return Err(ClusterError::InvalidRange { lo, hi, max });
    }
    let mut per_k = Vec::new();
    for k in k_range {
        let report = kmeans_with(
            vectors,
            &KMeansConfig {
                k,
                seed,
                restarts,
                ..Default::default()
            },
        )?;
        per_k.push(KScore {
            k,
            distortion: report.distortion,
            silhouette: report.silhouette.expect("k >= 2"),
            calinski_harabasz: report.calinski_harabasz.expect("n > k"),
        });
    }
    let chosen_k = per_k
        .iter()
        .fold(None::<&KScore>, |best, s| match best {
            Some(b) if b.silhouette >= s.silhouette => Some(b),
            _ => Some(s),
        })
        .expect("range is non-empty")
        .k;
    Ok(KSelection { chosen_k, per_k })
}

/// Counts per (cluster, label value).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crosstab {
    /// Label values in sorted order.
    pub values: Vec<String>,
    /// `counts[cluster][value index]`.
    pub counts: Vec<Vec<u64>>,
}

impl Crosstab {
    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.row_sums().iter().sum()
    }

    pub fn get(&self, cluster: usize, value: &str) -> u64 {
        self.values
            .iter()
            .position(|v| v == value)
            .and_then(|i| self.counts.get(cluster).map(|r| r[i]))
            .unwrap_or(0)
    }
}

/// Contingency table of cluster ids against one label per point. Rows run
/// over `0..=max(assignments)`.
pub fn cluster_crosstab<S: AsRef<str>>(assignments: &[usize], labels: &[S]) -> Result<Crosstab, ClusterError> {
    if labels.len() != assignments.len() {
        return Err(ClusterError::CoverageGap {
            labels: labels.len(),
            points: assignments.len(),
        });
    }
    let values: Vec<String> = labels
        .iter()
        .map(|l| l.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = values.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0u64; values.len()]; k];
    for (&a, l) in assignments.iter().zip(labels) {
        counts[a][index[l.as_ref()]] += 1;
    }
    Ok(Crosstab { values, counts })
}

/// Scales each vector to unit length; zero vectors stay zero.
pub fn l2_normalize(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    vectors
        .iter()
        .map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                v.clone()
            } else {
                v.iter().map(|x| x / n).collect()
            }
        })
        .collect()
}

/// Reads a matrix with one comma-separated vector per line.
pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>, ClusterError> {
    let io = |reason: String| ClusterError::Io {
        path: path.display().to_string(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io(e.to_string()))?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| io(format!("line {}: {e}", i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(row);
    }
    check_vectors(&out)?;
    Ok(out)
}
