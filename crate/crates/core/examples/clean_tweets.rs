//! Cleans a handful of tweets and applies the English-ratio filter.

use charprobe::corpus::{filter_tweets, Cleaner, EnglishDictionary, RawTweet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let texts = [
        "Farmers are PROTESTING in Delhi today! https://t.co/abc #FarmersProtest",
        "@PMOIndia please listen to the farmers 🙏🙏",
        "kisan ekta zindabad",
        "@a #b",
    ];
    let raws: Vec<RawTweet> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| RawTweet {
            id: i.to_string(),
            text: t.to_string(),
            corpus_tag: "demo".into(),
        })
        .collect();
    let cleaner = Cleaner::default();
    for raw in &raws {
        println!("{:?} -> {:?}", raw.text, cleaner.clean(&raw.text));
    }
    let out = filter_tweets(&raws, 0.70, &cleaner, &EnglishDictionary::bundled())?;
    for t in &out.kept {
        println!("kept {} ratio {:.2}: {}", t.id, t.english_ratio, t.text);
    }
    println!("rejected: {} empty, {} below ratio", out.tally.empty, out.tally.ratio);
    Ok(())
}
