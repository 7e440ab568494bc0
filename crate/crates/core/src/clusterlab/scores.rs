use std::collections::BTreeMap;

use super::{check_vectors, sq_dist, ClusterError};

/// Sum of squared distances from each vector to its assigned centroid.
pub fn distortion(vectors: &[Vec<f64>], assignments: &[usize], centroids: &[Vec<f64>]) -> Result<f64, ClusterError> {
    if vectors.len() != assignments.len() {
        return Err(ClusterError::ShapeMismatch(format!(
            "{} vectors, {} assignments",
            vectors.len(),
            assignments.len()
        )));
    }
    let mut total = 0.0;
    for (v, &a) in vectors.iter().zip(assignments) {
        let c = centroids
            .get(a)
            .ok_or_else(|| ClusterError::ShapeMismatch(format!("cluster {a} has no centroid")))?;
        if c.len() != v.len() {
            return Err(ClusterError::ShapeMismatch(format!(
                "centroid {a} has dimension {}, vectors {}",
                c.len(),
                v.len()
            )));
        }
        total += sq_dist(v, c);
    }
    Ok(total)
}

/// Members of each non-empty cluster, keyed by cluster id.
fn members(vectors: &[Vec<f64>], assignments: &[usize]) -> Result<BTreeMap<usize, Vec<usize>>, ClusterError> {
    check_vectors(vectors)?;
    if vectors.len() != assignments.len() {
        return Err(ClusterError::ShapeMismatch(format!(
            "{} vectors, {} assignments",
            vectors.len(),
            assignments.len()
        )));
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &a) in assignments.iter().enumerate() {
        groups.entry(a).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(ClusterError::SingleCluster);
    }
    Ok(groups)
}

/// Mean over points of `(b - a) / max(a, b)`, with `a` the mean distance
/// to the rest of the point's cluster and `b` the smallest mean distance
/// to another cluster. Points alone in their cluster score 0.
pub fn silhouette(vectors: &[Vec<f64>], assignments: &[usize]) -> Result<f64, ClusterError> {
    let groups = members(vectors, assignments)?;
    let n = vectors.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = sq_dist(&vectors[i], &vectors[j]).sqrt();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = &groups[&assignments[i]];
        if own.len() == 1 {
            continue;
        }
        let mean_to = |idx: &[usize]| idx.iter().map(|&j| dist[i * n + j]).sum::<f64>();
        let a = mean_to(own) / (own.len() - 1) as f64;
        let b = groups
            .iter()
            .filter(|(c, _)| **c != assignments[i])
            .map(|(_, idx)| mean_to(idx) / idx.len() as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

/// `(B / (k - 1)) / (W / (n - k))` with `B` the size-weighted squared
/// distances of cluster means to the overall mean and `W` the squared
/// distances of points to their cluster mean. `W = 0` gives infinity.
pub fn calinski_harabasz(vectors: &[Vec<f64>], assignments: &[usize]) -> Result<f64, ClusterError> {
    let groups = members(vectors, assignments)?;
    let (n, k) = (vectors.len(), groups.len());
    if n <= k {
        return Err(ClusterError::TooFewPoints { n, k: k + 1 });
    }
    let dim = vectors[0].len();
    let mean_of = |idx: &mut dyn Iterator<Item = usize>| {
        let mut s = vec![0.0; dim];
        let mut c = 0usize;
        for i in idx {
            for (a, x) in s.iter_mut().zip(&vectors[i]) {
                *a += x;
            }
            c += 1;
        }
        s.into_iter().map(|x| x / c as f64).collect::<Vec<_>>()
    };
    let overall = mean_of(&mut (0..n));
    let mut between = 0.0;
    let mut within = 0.0;
    for idx in groups.values() {
        let m = mean_of(&mut idx.iter().copied());
        between += idx.len() as f64 * sq_dist(&m, &overall);
        within += idx.iter().map(|&i| sq_dist(&vectors[i], &m)).sum::<f64>();
    }
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}
