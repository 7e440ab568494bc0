//! Embeds two output sets and compares their centroids.

use charprobe::embedkit::{centroid_distance, EmbeddingBackend, HashEmbedder, Metric};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let embedder = HashEmbedder::new(32, 0);
    let adapted = ["a brave farmer leader", "a leader of the farmers", "a farmer who fights"];
    let reference = ["a famous actor", "an actor and singer", "a well known film star"];
    let a = embedder.embed_raw(&adapted)?;
    let r = embedder.embed_raw(&reference)?;
    let a: Vec<&[f64]> = a.iter().map(Vec::as_slice).collect();
    let r: Vec<&[f64]> = r.iter().map(Vec::as_slice).collect();
    for metric in [Metric::Cosine, Metric::Euclidean] {
        println!(
            "{}: adapted vs reference {:.4}, adapted vs itself {:.4}",
            metric.as_str(),
            centroid_distance(&a, &r, metric)?,
            centroid_distance(&a, &a, metric)?
        );
    }
    Ok(())
}
