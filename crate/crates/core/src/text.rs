//! Character classes and tokenization shared by the cleaning pipeline,
//! the validity filter and the lexicon metrics.

use std::sync::LazyLock;

use regex::Regex;

static PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\p{P}$").unwrap());
static EMOJI_NAME: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^:[a-z0-9_]+:$").unwrap());

/// Unicode general category `P*`.
pub fn is_unicode_punctuation(c: char) -> bool {
    let mut buf = [0u8; 4];
    PUNCT.is_match(c.encode_utf8(&mut buf))
}

/// Pictographic codepoints treated as emoji.
pub fn is_emoji_char(c: char) -> bool {
    let cp = c as u32;
    if is_unicode_punctuation(c) {
        return false;
    }
    matches!(
        cp,
        0x1F000..=0x1F02F
            | 0x1F0A0..=0x1F0FF
            | 0x1F170..=0x1F251
            | 0x1F300..=0x1F5FF
            | 0x1F600..=0x1F64F
            | 0x1F680..=0x1F6FF
            | 0x1F900..=0x1F9FF
            | 0x1FA70..=0x1FAFF
            | 0x2600..=0x26FF
            | 0x2700..=0x27BF
            | 0x231A..=0x231B
            | 0x23E9..=0x23FA
            | 0x2B1B..=0x2B1C
            | 0x2B50
            | 0x2B55
    )
}

/// Joiners, variation selectors, skin tones, keycaps, tags and regional
/// indicators: parts of emoji sequences that carry no name of their own.
pub fn is_emoji_component(c: char) -> bool {
    matches!(
        c as u32,
        0x200D | 0xFE0E | 0xFE0F | 0x20E3 | 0x1F3FB..=0x1F3FF | 0xE0020..=0xE007F | 0x1F1E6..=0x1F1FF
    )
}

/// A token of the form `:name:` produced by emoji replacement.
pub fn is_emoji_name_token(token: &str) -> bool {
    EMOJI_NAME.is_match(token)
}

pub fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Lowercased word tokens with leading and trailing punctuation removed.
/// Tokens that are pure punctuation disappear.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| is_unicode_punctuation(c) && c != ':'))
        .map(|t| t.trim_matches(|c: char| c == ':' && !is_emoji_name_token(t)))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Tokens that contain at least one alphabetic character.
pub fn count_words(text: &str) -> usize {
    word_tokens(text)
        .iter()
        .filter(|t| !is_emoji_name_token(t) && t.chars().any(char::is_alphabetic))
        .count()
}

pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn punctuation_classes() {
        for c in ['.', ',', '!', '?', '@', '#', '_', '-', '(', '\u{201C}', ':'] {
            assert!(is_unicode_punctuation(c), "{c:?}");
        }
        for c in ['a', '1', ' ', '$', '+', '\u{1F642}'] {
            assert!(!is_unicode_punctuation(c), "{c:?}");
        }
    }

    #[test]
    fn emoji_detection() {
        assert!(is_emoji_char('\u{1F642}'));
        assert!(is_emoji_char('\u{2764}'));
        assert!(!is_emoji_char('a'));
        assert!(is_emoji_component('\u{FE0F}'));
        assert!(is_emoji_name_token(":slightly_smiling_face:"));
        assert!(!is_emoji_name_token(":Nope:"));
    }

    #[test]
    fn word_tokens_trim_edges() {
        assert_eq!(
            word_tokens("Kind, and generous leader."),
            vec!["kind", "and", "generous", "leader"]
        );
        assert_eq!(word_tokens("don't !!! :red_heart:"), vec!["don't", ":red_heart:"]);
        assert_eq!(count_words("it is 2020 :red_heart:"), 2);
    }
}
