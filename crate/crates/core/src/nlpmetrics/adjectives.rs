use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};

use super::{parse_sections, read_lexicon_file, MetricsError};
use crate::text::{is_emoji_name_token, word_tokens};

static BUNDLED: LazyLock<AdjectiveLexicon> = LazyLock::new(|| {
    AdjectiveLexicon::parse(include_str!("../../data/adjectives.txt"), "bundled")
        .expect("bundled adjective lexicon parses")
});

/// Adjective part-of-speech tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AdjTag {
    /// Adjective.
    JJ,
    /// Comparative adjective.
    JJR,
    /// Superlative adjective.
    JJS,
}

impl AdjTag {
    pub fn as_str(self) -> &'static str {
        match self {
            AdjTag::JJ => "JJ",
            AdjTag::JJR => "JJR",
            AdjTag::JJS => "JJS",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "JJ" => Some(AdjTag::JJ),
            "JJR" => Some(AdjTag::JJR),
            "JJS" => Some(AdjTag::JJS),
            _ => None,
        }
    }
}

/// Adjective tokens of a text in order of appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjectiveSet {
    pub tokens: Vec<String>,
    pub tags: Vec<AdjTag>,
}

impl AdjectiveSet {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, AdjTag)> {
        self.tokens.iter().map(String::as_str).zip(self.tags.iter().copied())
    }

    pub fn tag_of(&self, token: &str) -> Option<AdjTag> {
        self.iter().find(|(t, _)| *t == token).map(|(_, tag)| tag)
    }
}

/// Word to tag map read from `[JJ]`, `[JJR]` and `[JJS]` sections. A word
/// listed in several sections keeps its first tag.
#[derive(Debug, Clone)]
pub struct AdjectiveLexicon {
    words: Arc<HashMap<String, AdjTag>>,
}

impl AdjectiveLexicon {
    pub fn bundled() -> Self {
        BUNDLED.clone()
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, MetricsError> {
        let mut words = HashMap::new();
        for (section, word) in parse_sections(text, origin)? {
            let tag = AdjTag::parse(&section).ok_or_else(|| MetricsError::Lexicon {
                path: origin.to_string(),
                reason: format!("unknown section [{section}]"),
            })?;
            words.entry(word).or_insert(tag);
        }
        Ok(Self { words: Arc::new(words) })
    }

    pub fn from_file(path: &Path) -> Result<Self, MetricsError> {
        Self::parse(&read_lexicon_file(path)?, &path.display().to_string())
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, AdjTag)>) -> Self {
        Self {
            words: Arc::new(pairs.into_iter().map(|(w, t)| (w.to_lowercase(), t)).collect()),
        }
    }

    pub fn get(&self, word: &str) -> Option<AdjTag> {
        self.words.get(word).copied()
    }

    fn is_base(&self, word: &str) -> bool {
        self.get(word) == Some(AdjTag::JJ)
    }

    /// Stems a suffixed form could come from: plain (`great`+`est`),
    /// silent e (`nice`), doubled consonant (`big`+`g`) and y to i
    /// (`happy`).
    fn has_base_stem(&self, word: &str, suffix: &str) -> bool {
        let Some(stem) = word.strip_suffix(suffix) else {
            return false;
        };
        if stem.chars().count() < 2 {
            return false;
        }
        let mut candidates = vec![stem.to_string(), format!("{stem}e")];
        let chars: Vec<char> = stem.chars().collect();
        if chars.len() >= 3 && chars[chars.len() - 1] == chars[chars.len() - 2] {
            candidates.push(chars[..chars.len() - 1].iter().collect());
        }
        if let Some(s) = stem.strip_suffix('i') {
            candidates.push(format!("{s}y"));
        }
        candidates.iter().any(|c| self.is_base(c))
    }
}

/// Finds adjectives in a text.
pub trait AdjectiveTagger: Send + Sync {
    /// Names the tagger in report provenance.
    fn tag(&self) -> &str;

    fn adjectives(&self, text: &str) -> Result<AdjectiveSet, MetricsError>;
}

/// Lexicon lookup plus suffix rules: an unlisted word ending in `-est`
/// whose stem is a listed adjective is JJS, and likewise `-er` is JJR.
#[derive(Debug, Clone)]
pub struct LexiconTagger {
    pub lexicon: AdjectiveLexicon,
}

impl Default for LexiconTagger {
    fn default() -> Self {
        Self {
            lexicon: AdjectiveLexicon::bundled(),
        }
    }
}

impl LexiconTagger {
    pub fn new(lexicon: AdjectiveLexicon) -> Self {
        Self { lexicon }
    }

    pub fn tag_word(&self, word: &str) -> Option<AdjTag> {
        if let Some(tag) = self.lexicon.get(word) {
            return Some(tag);
        }
        if self.lexicon.has_base_stem(word, "est") {
            return Some(AdjTag::JJS);
        }
        if self.lexicon.has_base_stem(word, "er") {
            return Some(AdjTag::JJR);
        }
        None
    }
}

impl AdjectiveTagger for LexiconTagger {
    fn tag(&self) -> &str {
        "lexicon"
    }

    fn adjectives(&self, text: &str) -> Result<AdjectiveSet, MetricsError> {
        if text.trim().is_empty() {
            return Err(MetricsError::EmptyText);
        }
        let mut set = AdjectiveSet::default();
        for token in word_tokens(text) {
            if is_emoji_name_token(&token) {
                continue;
            }
            if let Some(tag) = self.tag_word(&token) {
                set.tokens.push(token);
                set.tags.push(tag);
            }
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adj(text: &str) -> AdjectiveSet {
        LexiconTagger::default().adjectives(text).unwrap()
    }

    #[test]
    fn reference_texts() {
        let s = adj("a very kind man");
        assert_eq!(s.tokens, ["kind"]);
        assert_eq!(s.tag_of("kind"), Some(AdjTag::JJ));
        let s = adj("the greatest leader");
        assert_eq!(s.tokens, ["greatest"]);
        assert_eq!(s.tag_of("greatest"), Some(AdjTag::JJS));
        assert!(adj("the the the").is_empty());
        assert_eq!(LexiconTagger::default().adjectives(""), Err(MetricsError::EmptyText));
    }

    #[test]
    fn suffix_rules_need_a_listed_stem() {
        let t = LexiconTagger::new(AdjectiveLexicon::from_pairs([
            ("tall", AdjTag::JJ),
            ("nice", AdjTag::JJ),
            ("big", AdjTag::JJ),
            ("happy", AdjTag::JJ),
        ]));
        assert_eq!(t.tag_word("tallest"), Some(AdjTag::JJS));
        assert_eq!(t.tag_word("nicest"), Some(AdjTag::JJS));
        assert_eq!(t.tag_word("biggest"), Some(AdjTag::JJS));
        assert_eq!(t.tag_word("happiest"), Some(AdjTag::JJS));
        assert_eq!(t.tag_word("taller"), Some(AdjTag::JJR));
        assert_eq!(t.tag_word("happier"), Some(AdjTag::JJR));
        assert_eq!(t.tag_word("forest"), None);
        assert_eq!(t.tag_word("tower"), None);
    }

    #[test]
    fn lexicon_sections_and_first_tag_wins() {
        let lex = AdjectiveLexicon::parse("[JJR]\nbetter\n[JJ]\nbetter\ngood\n", "t").unwrap();
        assert_eq!(lex.get("better"), Some(AdjTag::JJR));
        assert_eq!(lex.get("good"), Some(AdjTag::JJ));
        assert!(AdjectiveLexicon::parse("[NN]\ndog\n", "t").is_err());
    }

    proptest::proptest! {
        #[test]
        fn adjectives_are_tokens_of_the_text(words in proptest::collection::vec("[a-zA-Z]{1,9}", 1..12)) {
            let text = words.join(" ");
            let tokens = word_tokens(&text);
            for t in adj(&text).tokens {
                proptest::prop_assert!(tokens.contains(&t));
                proptest::prop_assert_eq!(t.to_lowercase(), t.clone());
            }
        }
    }
}
