//! The five-clause validity rule for generated continuations.

use serde::{Deserialize, Serialize};

use crate::corpus::EnglishDictionary;
use crate::text::{is_emoji_char, is_emoji_component, is_emoji_name_token, word_tokens};

/// Why a continuation was accepted or rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Valid,
    Empty,
    ResidualTag,
    ResidualEmoji,
    TooFewWords,
    LowEnglishRatio,
    Unterminated,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Valid => "valid",
            Reason::Empty => "empty",
            Reason::ResidualTag => "residual_tag",
            Reason::ResidualEmoji => "residual_emoji",
            Reason::TooFewWords => "too_few_words",
            Reason::LowEnglishRatio => "low_english_ratio",
            Reason::Unterminated => "unterminated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    pub reason: Reason,
}

impl Verdict {
    fn of(reason: Reason) -> Self {
        Self {
            valid: reason == Reason::Valid,
            reason,
        }
    }
}

/// Thresholds of the validity rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidityRules {
    pub min_words: usize,
    /// Strict lower bound on the English-word fraction.
    pub english_threshold: f64,
    /// Word count that stands in for a sentence terminal.
    pub token_floor: usize,
}

impl Default for ValidityRules {
    fn default() -> Self {
        Self {
            min_words: 3,
            english_threshold: 0.70,
            token_floor: 8,
        }
    }
}

/// Applies the clauses in order and reports the first one that fails:
/// non-empty, no residual `@`/`#` tokens or emoji, at least `min_words`
/// words, English ratio above the threshold, and a sentence terminal or at
/// least `token_floor` words.
pub fn check(text: &str, dictionary: &EnglishDictionary, rules: &ValidityRules) -> Verdict {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Verdict::of(Reason::Empty);
    }
    if trimmed
        .split_whitespace()
        .any(|t| t.starts_with('@') || t.starts_with('#'))
    {
        return Verdict::of(Reason::ResidualTag);
    }
    if trimmed.chars().any(|c| is_emoji_char(c) || is_emoji_component(c)) {
        return Verdict::of(Reason::ResidualEmoji);
    }
    let words: Vec<String> = word_tokens(trimmed)
        .into_iter()
        .filter(|t| !is_emoji_name_token(t) && t.chars().any(char::is_alphabetic))
        .collect();
    if words.len() < rules.min_words {
        return Verdict::of(Reason::TooFewWords);
    }
    let hits = words.iter().filter(|w| dictionary.contains(w)).count();
    if hits as f64 / words.len() as f64 <= rules.english_threshold {
        return Verdict::of(Reason::LowEnglishRatio);
    }
    let terminated = trimmed.contains(['.', '!', '?', '\u{2026}']);
    if !terminated && words.len() < rules.token_floor {
        return Verdict::of(Reason::Unterminated);
    }
    Verdict::of(Reason::Valid)
}

/// [`check`] with the default thresholds.
pub fn is_valid_entailment(text: &str, dictionary: &EnglishDictionary) -> Verdict {
    check(text, dictionary, &ValidityRules::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundled(text: &str) -> Reason {
        is_valid_entailment(text, &EnglishDictionary::bundled()).reason
    }

    #[test]
    fn reference_cases() {
        assert_eq!(bundled("kind and generous leader."), Reason::Valid);
        assert_eq!(bundled(""), Reason::Empty);
        assert_eq!(bundled("   "), Reason::Empty);
        assert_eq!(bundled("#win #win #win"), Reason::ResidualTag);
    }

    #[test]
    fn each_clause_rejects() {
        assert_eq!(bundled("a great man @you."), Reason::ResidualTag);
        assert_eq!(bundled("a great man \u{1F642}."), Reason::ResidualEmoji);
        assert_eq!(bundled("great man."), Reason::TooFewWords);
        assert_eq!(bundled("zzqx vvbn qqpt man."), Reason::LowEnglishRatio);
        assert_eq!(bundled("a kind man"), Reason::Unterminated);
        assert_eq!(
            bundled("a kind man who always helps the people of his town"),
            Reason::Valid
        );
    }

    #[test]
    fn ratio_boundary_is_strict() {
        let dict = EnglishDictionary::from_words(["aa", "bb", "cc", "dd", "ee", "ff", "gg"]);
        let text = "aa bb cc dd ee ff gg xx yy zz.";
        assert_eq!(check(text, &dict, &ValidityRules::default()).reason, Reason::LowEnglishRatio);
        let text = "aa bb cc dd ee ff gg aa yy zz.";
        assert_eq!(check(text, &dict, &ValidityRules::default()).reason, Reason::Valid);
    }
}
