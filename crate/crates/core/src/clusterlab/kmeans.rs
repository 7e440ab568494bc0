use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{calinski_harabasz, check_vectors, distortion, l2_normalize, silhouette, sq_dist, ClusterError, ClusterReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Converged once no centroid moves farther than this.
    pub tol: f64,
    /// Independent k-means++ starts; the lowest distortion is kept and
    /// ties go to the earlier start.
    pub restarts: usize,
    /// Scale vectors to unit length before clustering.
    pub normalize: bool,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            seed: 0,
            max_iter: 300,
            tol: 1e-6,
            restarts: 1,
            normalize: false,
        }
    }
}

/// One start with the default settings.
pub fn kmeans(vectors: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterReport, ClusterError> {
    kmeans_with(
        vectors,
        &KMeansConfig {
            k,
            seed,
            ..Default::default()
        },
    )
}

/// Lloyd iterations from k-means++ starts, each followed by single-point
/// transfers until no move lowers the distortion.
pub fn kmeans_with(vectors: &[Vec<f64>], config: &KMeansConfig) -> Result<ClusterReport, ClusterError> {
    check_vectors(vectors)?;
    let k = config.k;
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    if vectors.len() < k {
        return Err(ClusterError::TooFewPoints { n: vectors.len(), k });
    }
    let normalized;
    let points = if config.normalize {
        normalized = l2_normalize(vectors);
        &normalized
    } else {
        vectors
    };
    let mut best: Option<Run> = None;
    for restart in 0..config.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(restart as u64);
        let run = lloyd(points, k, config, &mut rng);
        if best.as_ref().is_none_or(|b| run.distortion < b.distortion) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");
    let silhouette = (k >= 2).then(|| silhouette(points, &run.assignments)).transpose().ok().flatten();
    let calinski_harabasz = (k >= 2 && points.len() > k)
        .then(|| calinski_harabasz(points, &run.assignments))
        .transpose()
        .ok()
        .flatten();
    Ok(ClusterReport {
        k,
        assignments: run.assignments,
        centroids: run.centroids,
        distortion: run.distortion,
        silhouette,
        calinski_harabasz,
        seed: config.seed,
        iterations: run.iterations,
        converged: run.converged,
    })
}

struct Run {
    assignments: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    distortion: f64,
    iterations: usize,
    converged: bool,
}

/// k-means++: the first center is uniform, each further center is drawn
/// with probability proportional to its squared distance to the nearest
/// chosen center.
fn init_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if *d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave the target past the last positive weight
            pick.unwrap_or_else(|| d2.iter().rposition(|d| *d > 0.0).unwrap())
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Nearest centroid; ties go to the lower id.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Gives every empty cluster the point farthest from its own centroid,
/// taken from a cluster with more than one member. Returns whether
/// anything moved.
fn repair_empty(points: &[Vec<f64>], assignments: &mut [usize], centroids: &mut [Vec<f64>]) -> bool {
    let k = centroids.len();
    let mut moved = false;
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return moved;
        };
        let far = (0..points.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .max_by(|&i, &j| {
                let di = sq_dist(&points[i], &centroids[assignments[i]]);
                let dj = sq_dist(&points[j], &centroids[assignments[j]]);
                di.total_cmp(&dj).then(j.cmp(&i))
            })
            .expect("n >= k leaves a cluster with two members");
        assignments[far] = empty;
        centroids[empty] = points[far].clone();
        moved = true;
    }
}

fn means(points: &[Vec<f64>], assignments: &[usize], previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; previous.len()];
    let mut counts = vec![0usize; previous.len()];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((s, c), prev)| {
            if c == 0 {
                prev.clone()
            } else {
                s.into_iter().map(|x| x / c as f64).collect()
            }
        })
        .collect()
}

fn lloyd(points: &[Vec<f64>], k: usize, config: &KMeansConfig, rng: &mut ChaCha8Rng) -> Run {
    let mut centroids = init_plus_plus(points, k, rng);
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    repair_empty(points, &mut assignments, &mut centroids);
    let mut current = distortion(points, &assignments, &centroids).expect("shapes agree");
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        iterations += 1;
        let updated = means(points, &assignments, &centroids);
        let shift = updated
            .iter()
            .zip(&centroids)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        let repaired = repair_empty(points, &mut next, &mut centroids);
        let d = distortion(points, &next, &centroids).expect("shapes agree");
        debug_assert!(
            d <= current + 1e-9 * current.max(1.0),
            "distortion rose from {current} to {d}"
        );
        current = d;
        let changed = next != assignments;
        assignments = next;
        if !changed || (shift < config.tol && !repaired) {
            converged = true;
            break;
        }
    }
    if transfer(points, &mut assignments, &mut centroids) {
        current = distortion(points, &assignments, &centroids).expect("shapes agree");
    }
    Run {
        assignments,
        centroids,
        distortion: current,
        iterations,
        converged,
    }
}

/// Moves single points between clusters while a move strictly lowers the
/// distortion. Moving `x` from `a` to `b` changes it by
/// `n_b / (n_b + 1) |x - c_b|^2 - n_a / (n_a - 1) |x - c_a|^2`.
/// Returns whether anything moved.
fn transfer(points: &[Vec<f64>], assignments: &mut [usize], centroids: &mut [Vec<f64>]) -> bool {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    let scale = points.iter().map(|p| sq_dist(p, &centroids[0])).fold(1.0, f64::max);
    let mut moved = false;
    loop {
        let mut improved = false;
        for (i, p) in points.iter().enumerate() {
            let a = assignments[i];
            if sizes[a] < 2 {
                continue;
            }
            let na = sizes[a] as f64;
            let removal = na / (na - 1.0) * sq_dist(p, &centroids[a]);
            let best = (0..k)
                .filter(|&b| b != a)
                .map(|b| {
                    let nb = sizes[b] as f64;
                    (b, nb / (nb + 1.0) * sq_dist(p, &centroids[b]) - removal)
                })
                .fold(None::<(usize, f64)>, |best, (b, d)| match best {
                    Some((_, bd)) if bd <= d => best,
                    _ => Some((b, d)),
                });
            let Some((b, delta)) = best else { continue };
            if delta >= -1e-12 * scale {
                continue;
            }
            let nb = sizes[b] as f64;
            for (c, x) in centroids[a].iter_mut().zip(p) {
                *c = (*c * na - x) / (na - 1.0);
            }
            for (c, x) in centroids[b].iter_mut().zip(p) {
                *c = (*c * nb + x) / (nb + 1.0);
            }
            sizes[a] -= 1;
            sizes[b] += 1;
            assignments[i] = b;
            improved = true;
            moved = true;
        }
        if !improved {
            break;
        }
    }
    if moved {
        let exact = means(points, assignments, centroids);
        centroids.clone_from_slice(&exact);
    }
    moved
}
