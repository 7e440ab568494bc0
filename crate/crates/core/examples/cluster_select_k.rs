//! Picks k for three synthetic blobs and prints the scores per k.

use charprobe::clusterlab::{cluster_crosstab, kmeans_with, select_k, KMeansConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let centers = [[0.0, 0.0], [8.0, 0.0], [4.0, 7.0]];
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (i, c) in centers.iter().enumerate() {
        for _ in 0..30 {
            points.push(vec![c[0] + rng.gen_range(-1.0..1.0), c[1] + rng.gen_range(-1.0..1.0)]);
            truth.push(format!("blob{i}"));
        }
    }
    let sel = select_k(&points, 2..=6, 10, 0)?;
    for s in &sel.per_k {
        println!("k={} distortion {:.2} silhouette {:.4} ch {:.2}", s.k, s.distortion, s.silhouette, s.calinski_harabasz);
    }
    println!("chosen k = {}", sel.chosen_k);
    let report = kmeans_with(
        &points,
        &KMeansConfig {
            k: sel.chosen_k,
            restarts: 10,
            ..Default::default()
        },
    )?;
    let table = cluster_crosstab(&report.assignments, &truth)?;
    for c in 0..report.k {
        let row: Vec<_> = table.values.iter().map(|v| format!("{v}={}", table.get(c, v))).collect();
        println!("cluster {c}: {}", row.join(" "));
    }
    Ok(())
}
