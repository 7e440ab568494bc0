use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::{Arc, LazyLock};

use super::CorpusError;

const BUNDLED_WORDS: &str = include_str!("../../data/english_words.txt");
const BUNDLED_EMOJI: &str = include_str!("../../data/emoji_map.tsv");

static DEFAULT_WORDS: LazyLock<Arc<HashSet<String>>> =
    LazyLock::new(|| Arc::new(parse_words(BUNDLED_WORDS)));
static DEFAULT_EMOJI: LazyLock<Arc<HashMap<char, String>>> =
    LazyLock::new(|| Arc::new(parse_emoji(BUNDLED_EMOJI, "<bundled>").expect("bundled emoji map")));

fn parse_words(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn parse_emoji(text: &str, origin: &str) -> Result<HashMap<char, String>, CorpusError> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: &str| CorpusError::Malformed {
            path: origin.to_string(),
            line: i + 1,
            reason: reason.to_string(),
        };
        let (cp, name) = line
            .split_once('\t')
            .ok_or_else(|| malformed("expected codepoint<TAB>name"))?;
        let cp = cp.trim().trim_start_matches("U+");
        let c = u32::from_str_radix(cp, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| malformed("bad codepoint"))?;
        let name = name.trim().trim_matches(':');
        if name.is_empty() {
            return Err(malformed("empty name"));
        }
        map.insert(c, name.to_string());
    }
    Ok(map)
}

/// Case-insensitive English word list.
#[derive(Debug, Clone)]
pub struct EnglishDictionary {
    words: Arc<HashSet<String>>,
}

impl Default for EnglishDictionary {
    fn default() -> Self {
        Self::bundled()
    }
}

impl EnglishDictionary {
    pub fn bundled() -> Self {
        Self {
            words: DEFAULT_WORDS.clone(),
        }
    }

    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            words: Arc::new(words.into_iter().map(str::to_lowercase).collect()),
        }
    }

    /// Newline-delimited word file.
    pub fn from_file(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Unreadable {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self {
            words: Arc::new(parse_words(&text)),
        })
    }

    pub fn contains(&self, word: &str) -> bool {
        if word.chars().any(char::is_uppercase) {
            self.words.contains(&word.to_lowercase())
        } else {
            self.words.contains(word)
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Emoji codepoint to lowercase snake_case name.
#[derive(Debug, Clone)]
pub struct EmojiMap {
    names: Arc<HashMap<char, String>>,
}

impl Default for EmojiMap {
    fn default() -> Self {
        Self::bundled()
    }
}

impl EmojiMap {
    pub fn bundled() -> Self {
        Self {
            names: DEFAULT_EMOJI.clone(),
        }
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (char, S)>) -> Self {
        Self {
            names: Arc::new(pairs.into_iter().map(|(c, s)| (c, s.into())).collect()),
        }
    }

    /// `codepoint<TAB>name` lines; the codepoint is hexadecimal, optionally
    /// prefixed with `U+`.
    pub fn from_file(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Unreadable {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self {
            names: Arc::new(parse_emoji(&text, &path.display().to_string())?),
        })
    }

    pub fn name(&self, c: char) -> Option<&str> {
        self.names.get(&c).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}
