//! Records labels from two annotators and reports agreement and consensus.

use charprobe::annotation::{cohen_kappa, AnnotationRecord, AnnotationStore};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = [true, true, true, true, true, false, false, false, false, false];
    let b = [true, true, true, true, false, true, false, false, false, false];
    println!("kappa of the raw lists: {:.4}", cohen_kappa(&a, &b)?);

    let store = AnnotationStore::permissive();
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        let id = format!("fd/{i:04}/01");
        store.submit(AnnotationRecord::new(&id, "ann_a", *x, *x && i % 2 == 0))?;
        store.submit(AnnotationRecord::new(&id, "ann_b", *y, *y && i % 2 == 0))?;
    }
    let r = store.agreement("ann_a", "ann_b")?;
    println!("n {} kappa relevant {:?} kappa characterizing {:?}", r.n, r.kappa_relevant, r.kappa_characterizing);
    let s = store.relevance_summary();
    println!(
        "non-relevant {} only-relevant {} relevant+characterizing {} total relevant {} disagreements {}",
        s.non_relevant, s.only_relevant, s.relevant_and_characterizing, s.total_relevant, s.disagreements
    );
    Ok(())
}
