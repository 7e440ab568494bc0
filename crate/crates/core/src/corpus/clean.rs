use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;

use super::lexicon::EmojiMap;
use super::RawTweet;
use crate::text::{
    collapse_whitespace, is_apostrophe, is_emoji_char, is_emoji_component, is_unicode_punctuation,
};

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:[a-z][a-z0-9+.\-]*://|www\.)").unwrap());

/// Characters removed by the last cleaning step.
///
/// The default is Unicode `P*` without `:` (kept so emoji names survive)
/// and without `_` (emoji names are snake_case). Apostrophes between two
/// alphanumeric characters are always kept so contractions stay intact.
#[derive(Debug, Clone, Default)]
pub enum PunctuationSet {
    #[default]
    Unicode,
    Custom(HashSet<char>),
}

impl PunctuationSet {
    pub fn custom(chars: impl IntoIterator<Item = char>) -> Self {
        Self::Custom(chars.into_iter().collect())
    }

    pub fn contains(&self, c: char) -> bool {
        match self {
            Self::Unicode => is_unicode_punctuation(c) && c != ':' && c != '_',
            Self::Custom(set) => set.contains(&c),
        }
    }
}

/// The tweet cleaning pipeline with its emoji table and punctuation set.
#[derive(Debug, Clone, Default)]
pub struct Cleaner {
    pub emoji: EmojiMap,
    pub punctuation: PunctuationSet,
}

impl Cleaner {
    pub fn new(emoji: EmojiMap, punctuation: PunctuationSet) -> Self {
        Self { emoji, punctuation }
    }

    /// Applies, in order: URL removal, lowercasing, mention removal,
    /// hashtag removal, emoji naming and punctuation removal, then
    /// collapses whitespace.
    pub fn clean(&self, raw: &str) -> String {
        let no_urls = raw
            .split_whitespace()
            .filter(|t| !URL.is_match(t))
            .collect::<Vec<_>>()
            .join(" ");
        let lower = no_urls.to_lowercase();
        let no_tags = lower
            .split_whitespace()
            .filter(|t| !t.starts_with('@') && !t.starts_with('#'))
            .collect::<Vec<_>>()
            .join(" ");
        let named = self.name_emoji(&no_tags);
        let stripped = strip_punctuation(&named, &self.punctuation);
        collapse_whitespace(&stripped)
    }

    pub fn clean_raw(&self, raw: &RawTweet) -> String {
        self.clean(&raw.text)
    }

    fn name_emoji(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        for c in text.chars() {
            if let Some(name) = self.emoji.name(c) {
                out.push_str(" :");
                out.push_str(name);
                out.push_str(": ");
            } else if !(is_emoji_char(c) || is_emoji_component(c)) {
                out.push(c);
            }
        }
        out
    }
}

/// Removes every character of `set` except apostrophes inside words.
pub fn strip_punctuation(text: &str, set: &PunctuationSet) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        if !set.contains(c) {
            out.push(c);
            continue;
        }
        let inside_word = is_apostrophe(c)
            && i > 0
            && chars[i - 1].is_alphanumeric()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if inside_word {
            out.push(c);
        }
    }
    out
}

/// [`Cleaner::clean`] with an explicit emoji table and punctuation set.
pub fn clean_tweet(raw: &RawTweet, emoji: &EmojiMap, punctuation: &PunctuationSet) -> String {
    Cleaner::new(emoji.clone(), punctuation.clone()).clean(&raw.text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean(s: &str) -> String {
        Cleaner::default().clean(s)
    }

    #[test]
    fn reference_examples() {
        assert_eq!(
            clean("Great WORK @leader #reform \u{1F642} http://x.co"),
            "great work :slightly_smiling_face:"
        );
        assert_eq!(clean("hello world"), "hello world");
        assert_eq!(clean("@a #b !!!"), "");
    }

    #[test]
    fn urls_are_removed_before_lowercasing() {
        assert_eq!(clean("see WWW.Example.com now"), "see now");
        assert_eq!(clean("ftp://files.example.org HTTPS://X.CO/abc ok"), "ok");
    }

    #[test]
    fn contractions_keep_their_apostrophe() {
        assert_eq!(clean("Don't 'quote' me"), "don't quote me");
        assert_eq!(clean("it\u{2019}s fine"), "it\u{2019}s fine");
    }

    #[test]
    fn unmapped_emoji_and_components_are_dropped() {
        let cleaner = Cleaner::new(EmojiMap::from_pairs::<&str>([]), PunctuationSet::Unicode);
        assert_eq!(cleaner.clean("ok \u{1F642}\u{FE0F} go"), "ok go");
    }

    #[test]
    fn emoji_glued_to_words_become_separate_tokens() {
        assert_eq!(clean("wow\u{1F642}wow"), "wow :slightly_smiling_face: wow");
    }

    #[test]
    fn custom_punctuation_set() {
        let cleaner = Cleaner::new(EmojiMap::default(), PunctuationSet::custom(['!']));
        assert_eq!(cleaner.clean("hi! there."), "hi there.");
    }
}

#[cfg(test)]
mod props {
    use proptest::prelude::*;

    use super::*;

    fn token() -> impl Strategy<Value = String> {
        prop_oneof![
            "[A-Za-z]{1,8}",
            "[@#][a-z0-9_]{0,6}",
            "(https?://|www\\.)[a-z./]{1,10}",
            prop::sample::select(vec!["🔥", "🙏🏽", "❤️", "😂", "“", "’", "...", "!?", ":", "_", "don't"]).prop_map(String::from),
            any::<char>().prop_map(String::from),
        ]
    }

    proptest! {
        #[test]
        fn cleaning_is_idempotent_and_normalized(tokens in prop::collection::vec(token(), 0..12), sep in "[ \t]{1,3}") {
            let c = Cleaner::default();
            let once = c.clean(&tokens.join(&sep));
            prop_assert_eq!(c.clean(&once), once.clone());
            prop_assert_eq!(once.trim(), once.as_str());
            prop_assert!(!once.contains("  "));
            prop_assert!(once.split_whitespace().all(|t| !t.starts_with('@') && !t.starts_with('#')));
        }
    }
}
