//! Designed prompts: the eight entity prefix-prompts and the four tweet
//! question families (boolean, multiple choice, general, and
//! synopsis-plus-question reading comprehension).
//!
//! Templates live in a declarative catalog (see `data/templates.toml`) so
//! new prompts can be added without code changes. Rendering is reversible:
//! [`Catalog::parse`] recovers the slot values from a rendered prompt.

mod catalog;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{Catalog, RenderOptions, Template};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("tweet text is empty")]
    EmptyTweet,
    #[error("synopsis is empty")]
    EmptySynopsis,
    #[error("entity name must be non-empty with no surrounding whitespace: {0:?}")]
    InvalidEntity(String),
    #[error("unknown template {0}")]
    UnknownTemplate(String),
    #[error("unknown {family} question {id}")]
    UnknownQuestion { family: Family, id: String },
    #[error("unknown prefix-prompt {0}")]
    UnknownPrefix(String),
    #[error("template {id}: {reason}")]
    BadTemplate { id: String, reason: String },
    #[error("missing value for slot {0}")]
    MissingSlot(Slot),
    #[error("text does not match template {0}")]
    NoMatch(String),
    #[error("catalog: {0}")]
    Catalog(String),
}

/// Template family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    EntityPrefix,
    BoolQ,
    Mcq,
    GeneralQ,
    RecordRc,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::EntityPrefix,
        Family::BoolQ,
        Family::Mcq,
        Family::GeneralQ,
        Family::RecordRc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::EntityPrefix => "entity_prefix",
            Family::BoolQ => "bool_q",
            Family::Mcq => "mcq",
            Family::GeneralQ => "general_q",
            Family::RecordRc => "record_rc",
        }
    }

    /// Slots a pattern of this family must contain exactly once.
    pub fn required_slots(self) -> &'static [Slot] {
        match self {
            Family::EntityPrefix => &[Slot::Entity],
            Family::BoolQ | Family::Mcq | Family::GeneralQ => &[Slot::Tweet],
            Family::RecordRc => &[Slot::Synopsis, Slot::Tweet],
        }
    }

    pub fn kind(self) -> PromptKind {
        match self {
            Family::EntityPrefix => PromptKind::EntityPrefix,
            Family::BoolQ => PromptKind::TweetBool,
            Family::Mcq => PromptKind::TweetMcq,
            Family::GeneralQ => PromptKind::TweetGeneral,
            Family::RecordRc => PromptKind::TweetRecord,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Entity,
    Tweet,
    Synopsis,
}

impl Slot {
    pub fn as_str(self) -> &'static str {
        match self {
            Slot::Entity => "entity",
            Slot::Tweet => "tweet",
            Slot::Synopsis => "synopsis",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Slot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "entity" => Ok(Slot::Entity),
            "tweet" => Ok(Slot::Tweet),
            "synopsis" => Ok(Slot::Synopsis),
            other => Err(format!("unknown slot {{{other}}}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    EntityPrefix,
    TweetBool,
    TweetMcq,
    TweetGeneral,
    TweetRecord,
}

/// A conditioning phrase appended after an entity name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrefixPrompt {
    pub id: &'static str,
    pub text: &'static str,
}

/// The eight designed prefix-prompts, in their canonical listing order.
pub const PREFIX_PROMPTS: [PrefixPrompt; 8] = [
    PrefixPrompt { id: "is_a_very", text: "is a very" },
    PrefixPrompt { id: "is_known_as", text: "is known as" },
    PrefixPrompt { id: "can_be_described_as_a", text: "can be described as a" },
    PrefixPrompt { id: "is_regarded_as_a", text: "is regarded as a" },
    PrefixPrompt { id: "lacks", text: "lacks" },
    PrefixPrompt { id: "is_called_the", text: "is called the" },
    PrefixPrompt { id: "probably_is_a", text: "probably is a" },
    PrefixPrompt { id: "can_be_inferred_as_a", text: "can be inferred as a" },
];

impl PrefixPrompt {
    pub fn by_id(id: &str) -> Result<Self, PromptError> {
        PREFIX_PROMPTS
            .iter()
            .find(|p| p.id == id)
            .copied()
            .ok_or_else(|| PromptError::UnknownPrefix(id.to_string()))
    }

    pub fn by_text(text: &str) -> Option<Self> {
        PREFIX_PROMPTS.iter().find(|p| p.text == text).copied()
    }

    /// Position in the canonical listing order.
    pub fn order(&self) -> usize {
        PREFIX_PROMPTS.iter().position(|p| p.id == self.id).unwrap_or(usize::MAX)
    }

    pub fn template_id(&self) -> String {
        format!("{}.{}", Family::EntityPrefix, self.id)
    }
}

/// A named entity to characterize.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    #[serde(default)]
    pub source_tag: String,
}

impl Entity {
    pub fn new(name: impl Into<String>, source_tag: impl Into<String>) -> Result<Self, PromptError> {
        let entity = Self {
            name: name.into(),
            source_tag: source_tag.into(),
        };
        entity.validate()?;
        Ok(entity)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.name.is_empty() || self.name.trim() != self.name {
            return Err(PromptError::InvalidEntity(self.name.clone()));
        }
        Ok(())
    }
}

/// A fully rendered prompt plus the values that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub kind: PromptKind,
    pub template_id: String,
    pub rendered: String,
    /// Slot values (`entity`, `tweet`, `synopsis`) plus descriptive keys
    /// (`prefix` for entity prompts, `question` for tweet prompts, and
    /// `tweet_id` when the tweet came from a corpus).
    pub slots: BTreeMap<String, String>,
}

impl PromptInstance {
    /// Stable key: template id plus the identifying slot value.
    pub fn key(&self) -> String {
        let subject = self
            .slots
            .get("entity")
            .or_else(|| self.slots.get("tweet_id"))
            .or_else(|| self.slots.get("tweet"))
            .map(String::as_str)
            .unwrap_or("");
        format!("{}|{}", self.template_id, subject)
    }

    pub fn slot(&self, name: &str) -> Option<&str> {
        self.slots.get(name).map(String::as_str)
    }
}

/// Multiple-choice rendering variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McqVariant {
    Inline,
    Lettered,
}

impl McqVariant {
    fn question_id(self) -> &'static str {
        match self {
            McqVariant::Inline => "inline",
            McqVariant::Lettered => "lettered",
        }
    }
}

/// Concept probed by a reading-comprehension prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Concept {
    Dogmatism,
    Eml,
    Emotion,
    Cta,
}

impl Concept {
    pub const ALL: [Concept; 4] = [Concept::Dogmatism, Concept::Eml, Concept::Emotion, Concept::Cta];

    pub fn as_str(self) -> &'static str {
        match self {
            Concept::Dogmatism => "dogmatism",
            Concept::Eml => "eml",
            Concept::Emotion => "emotion",
            Concept::Cta => "cta",
        }
    }

    /// Bundled placeholder synopsis. Not canonical; supply your own.
    pub fn placeholder_synopsis(self) -> &'static str {
        match self {
            Concept::Dogmatism => include_str!("../../data/synopses/dogmatism.txt"),
            Concept::Eml => include_str!("../../data/synopses/eml.txt"),
            Concept::Emotion => include_str!("../../data/synopses/emotion.txt"),
            Concept::Cta => include_str!("../../data/synopses/cta.txt"),
        }
        .trim_end()
    }
}

impl FromStr for Concept {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Concept::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| PromptError::UnknownQuestion {
                family: Family::RecordRc,
                id: s.to_string(),
            })
    }
}

/// `entity.name + " " + prefix.text`.
pub fn render_entity_prompt(entity: &Entity, prefix: &PrefixPrompt) -> Result<PromptInstance, PromptError> {
    entity.validate()?;
    let mut slots = BTreeMap::new();
    slots.insert("entity".to_string(), entity.name.clone());
    slots.insert("prefix".to_string(), prefix.text.to_string());
    Ok(PromptInstance {
        kind: PromptKind::EntityPrefix,
        template_id: prefix.template_id(),
        rendered: format!("{} {}", entity.name, prefix.text),
        slots,
    })
}

pub fn render_tweet_bool(tweet: &str, question_id: &str) -> Result<PromptInstance, PromptError> {
    Catalog::bundled().render_question(Family::BoolQ, question_id, tweet, None)
}

pub fn render_tweet_mcq(tweet: &str, variant: McqVariant) -> Result<PromptInstance, PromptError> {
    Catalog::bundled().render_question(Family::Mcq, variant.question_id(), tweet, None)
}

pub fn render_tweet_general(tweet: &str, question_id: &str) -> Result<PromptInstance, PromptError> {
    Catalog::bundled().render_question(Family::GeneralQ, question_id, tweet, None)
}

pub fn render_tweet_record(synopsis: &str, tweet: &str, concept: Concept) -> Result<PromptInstance, PromptError> {
    Catalog::bundled().render_question(Family::RecordRc, concept.as_str(), tweet, Some(synopsis))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entity_prompts() {
        let jane = Entity::new("Jane", "M1").unwrap();
        let p = render_entity_prompt(&jane, &PrefixPrompt::by_id("is_a_very").unwrap()).unwrap();
        assert_eq!(p.rendered, "Jane is a very");
        assert_eq!(p.kind, PromptKind::EntityPrefix);
        let p = render_entity_prompt(&jane, &PrefixPrompt::by_id("can_be_described_as_a").unwrap()).unwrap();
        assert_eq!(p.rendered, "Jane can be described as a");
        let p1 = Entity::new("P1", "").unwrap();
        let p = render_entity_prompt(&p1, &PrefixPrompt::by_id("lacks").unwrap()).unwrap();
        assert_eq!(p.rendered, "P1 lacks");
        assert_eq!(p.key(), "entity_prefix.lacks|P1");
    }

    #[test]
    fn bundled_prefix_set_is_exact() {
        let texts: Vec<_> = PREFIX_PROMPTS.iter().map(|p| p.text).collect();
        assert_eq!(
            texts,
            [
                "is a very",
                "is known as",
                "can be described as a",
                "is regarded as a",
                "lacks",
                "is called the",
                "probably is a",
                "can be inferred as a"
            ]
        );
    }

    #[test]
    fn entity_names_are_validated() {
        assert!(Entity::new("", "x").is_err());
        assert!(Entity::new(" Jane", "x").is_err());
        assert!(Entity::new("Jane ", "x").is_err());
    }

    #[test]
    fn bool_questions() {
        let p = render_tweet_bool("T", "advocacy").unwrap();
        assert_eq!(p.rendered, "T. Q: Is it true that preceding sentence advocates a cause? A:");
        let p = render_tweet_bool("T", "favors").unwrap();
        assert_eq!(p.rendered, "T. Q: Is it true that preceding sentence favors a cause ? A:");
        assert_eq!(render_tweet_bool("", "advocacy"), Err(PromptError::EmptyTweet));
        assert!(matches!(
            render_tweet_bool("T", "nope"),
            Err(PromptError::UnknownQuestion { .. })
        ));
    }

    #[test]
    fn mcq_variants() {
        let p = render_tweet_mcq("T", McqVariant::Lettered).unwrap();
        let lines: Vec<_> = p.rendered.lines().skip(1).collect();
        assert_eq!(
            lines,
            [
                "A) information",
                "B) disinformation",
                "C) advocacy",
                "D) hyper-advocacy",
                "E) propaganda",
                "F) none of the above"
            ]
        );
        let p = render_tweet_mcq("T", McqVariant::Inline).unwrap();
        assert!(p
            .rendered
            .contains("information, rhetoric, advocacy, hyper-advocacy, dogma, or propaganda?"));
        let slots = Catalog::bundled().parse(&p.template_id, &p.rendered).unwrap();
        assert_eq!(slots.get(&Slot::Tweet).map(String::as_str), Some("T"));
        assert_eq!(render_tweet_mcq("", McqVariant::Inline), Err(PromptError::EmptyTweet));
    }

    #[test]
    fn general_questions() {
        let p = render_tweet_general("T", "dominant_emotion").unwrap();
        assert_eq!(p.rendered, "T. Q: What is the dominant emotion in the above <Tweet>? A:");
        let p = render_tweet_general("T", "sentiment").unwrap();
        assert_eq!(p.rendered, "T. Q: What is the sentiment of the above <Tweet>? A:");
        assert!(render_tweet_general("T", "unknown").is_err());
        assert_eq!(render_tweet_general("", "sentiment"), Err(PromptError::EmptyTweet));
    }

    #[test]
    fn record_questions() {
        let p = render_tweet_record("S", "T", Concept::Dogmatism).unwrap();
        assert_eq!(p.rendered, "S\nQuestion: John says \"T\". Does John's saying contain dogmatic content?");
        let p = render_tweet_record("S", "T", Concept::Cta).unwrap();
        assert!(p.rendered.ends_with("Can John's saying be classified as Call-To-Action?"));
        let p = render_tweet_record("S", "T", Concept::Emotion).unwrap();
        assert!(!p.rendered.contains("Jhon"));
        assert_eq!(render_tweet_record("", "T", Concept::Eml), Err(PromptError::EmptySynopsis));
        assert_eq!(render_tweet_record("S", "", Concept::Eml), Err(PromptError::EmptyTweet));
    }

    #[test]
    fn placeholder_synopses_are_marked() {
        for c in Concept::ALL {
            assert!(c.placeholder_synopsis().starts_with("PLACEHOLDER"));
        }
    }
}
