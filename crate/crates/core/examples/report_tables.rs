//! Builds a small report table and renders it as CSV and Markdown.

use charprobe::report::{Cell, Table};
use charprobe::Ratio;

fn main() {
    let mut t = Table::new("sentiment_by_prompt", "Sentiment per prefix-prompt", &["prefix", "neg", "pos", "pct_positive"]);
    t.provenance.push("sentiment: lexicon".into());
    for (prefix, neg, pos) in [("is a very", 2, 8), ("lacks", 7, 3), ("is known as", 0, 0)] {
        t.push(vec![Cell::text(prefix), Cell::Int(neg), Cell::Int(pos), Cell::pct(Ratio::new(pos, neg + pos), 2)]);
    }
    print!("{}", t.to_csv(false));
    println!();
    print!("{}", t.to_markdown());
}
