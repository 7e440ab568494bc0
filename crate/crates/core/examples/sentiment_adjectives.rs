//! Labels sentiment and finds adjectives, then builds the per-group tables.

use charprobe::nlpmetrics::{
    adjective_presence_table, sentiment_ratio_table, AdjectiveTagger, LexiconSentiment, LexiconTagger, SentimentBackend,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let groups = [
        ("is a very", vec!["a very honest and kind man.", "a very corrupt leader."]),
        ("lacks", vec!["lacks the courage to act.", "lacks nothing at all."]),
    ];
    let sentiment = LexiconSentiment::default();
    let tagger = LexiconTagger::default();
    let mut polarities = Vec::new();
    let mut adjectives = Vec::new();
    for (group, texts) in &groups {
        let labels = sentiment.classify(texts)?;
        let sets = texts.iter().map(|t| tagger.adjectives(t)).collect::<Result<Vec<_>, _>>()?;
        for ((t, l), s) in texts.iter().zip(&labels).zip(&sets) {
            let adj: Vec<_> = s.iter().map(|(w, tag)| format!("{w}/{}", tag.as_str())).collect();
            println!("{group:<10} {:?} score {:+} adjectives {adj:?}: {t}", l.value, l.score);
        }
        polarities.push((group.to_string(), labels.into_iter().map(|l| l.value).collect()));
        adjectives.push((group.to_string(), sets));
    }
    for row in sentiment_ratio_table(&polarities)? {
        println!("{}: {}% positive", row.group, row.pct_positive().percent_fixed(2));
    }
    for row in adjective_presence_table(&adjectives)? {
        println!("{}: {}% with adjectives", row.group, row.pct_present().percent_fixed(2));
    }
    Ok(())
}
