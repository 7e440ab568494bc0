use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Family, PromptError, PromptInstance, Slot};

const BUNDLED_CATALOG: &str = include_str!("../../data/templates.toml");

static BUNDLED: LazyLock<Catalog> =
    LazyLock::new(|| Catalog::from_toml_str(BUNDLED_CATALOG).expect("bundled catalog is valid"));

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Lit(String),
    Slot(Slot),
}

/// One catalog entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub id: String,
    pub family: Family,
    pub pattern: String,
    #[serde(skip)]
    segments: Vec<Segment>,
}

impl Template {
    pub fn new(id: &str, family: Family, pattern: &str) -> Result<Self, PromptError> {
        let segments = parse_pattern(id, family, pattern)?;
        Ok(Self {
            id: id.to_string(),
            family,
            pattern: pattern.to_string(),
            segments,
        })
    }

    /// The part of the id after the family, e.g. `advocacy` for
    /// `bool_q.advocacy`.
    pub fn question_id(&self) -> &str {
        self.id
            .strip_prefix(self.family.as_str())
            .and_then(|s| s.strip_prefix('.'))
            .unwrap_or(&self.id)
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.segments.iter().filter_map(|s| match s {
            Segment::Slot(slot) => Some(*slot),
            Segment::Lit(_) => None,
        })
    }

    fn literal(&self, lit: &str, options: RenderOptions) -> String {
        if options.normalize_spacing {
            lit.replace(" ?", "?")
        } else {
            lit.to_string()
        }
    }

    /// Fills every slot; values are inserted verbatim.
    pub fn render(&self, values: &BTreeMap<Slot, String>, options: RenderOptions) -> Result<String, PromptError> {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Lit(lit) => out.push_str(&self.literal(lit, options)),
                Segment::Slot(slot) => {
                    let value = values.get(slot).ok_or(PromptError::MissingSlot(*slot))?;
                    check_value(*slot, value)?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }

    /// Recovers slot values from a rendered prompt. A slot followed by the
    /// final literal takes everything up to that suffix; a slot followed by
    /// an inner literal ends at its first occurrence.
    pub fn parse(&self, rendered: &str, options: RenderOptions) -> Result<BTreeMap<Slot, String>, PromptError> {
        let no_match = || PromptError::NoMatch(self.id.clone());
        let mut values = BTreeMap::new();
        let mut rest = rendered;
        let mut i = 0;
        while i < self.segments.len() {
            match &self.segments[i] {
                Segment::Lit(lit) => {
                    let lit = self.literal(lit, options);
                    rest = rest.strip_prefix(lit.as_str()).ok_or_else(no_match)?;
                    i += 1;
                }
                Segment::Slot(slot) => match self.segments.get(i + 1) {
                    None => {
                        values.insert(*slot, rest.to_string());
                        rest = "";
                        i += 1;
                    }
                    Some(Segment::Lit(lit)) => {
                        let lit = self.literal(lit, options);
                        let end = if i + 2 == self.segments.len() {
                            rest.strip_suffix(lit.as_str()).ok_or_else(no_match)?.len()
                        } else {
                            rest.find(lit.as_str()).ok_or_else(no_match)?
                        };
                        values.insert(*slot, rest[..end].to_string());
                        rest = &rest[end + lit.len()..];
                        i += 2;
                    }
                    Some(Segment::Slot(_)) => return Err(no_match()),
                },
            }
        }
        if !rest.is_empty() {
            return Err(no_match());
        }
        Ok(values)
    }
}

fn check_value(slot: Slot, value: &str) -> Result<(), PromptError> {
    if !value.trim().is_empty() {
        return Ok(());
    }
    Err(match slot {
        Slot::Tweet => PromptError::EmptyTweet,
        Slot::Synopsis => PromptError::EmptySynopsis,
        Slot::Entity => PromptError::InvalidEntity(value.to_string()),
    })
}

fn parse_pattern(id: &str, family: Family, pattern: &str) -> Result<Vec<Segment>, PromptError> {
    let bad = |reason: String| PromptError::BadTemplate {
        id: id.to_string(),
        reason,
    };
    let mut segments = Vec::new();
    let mut lit = String::new();
    let mut chars = pattern.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '{' if chars.peek() == Some(&'{') => {
                chars.next();
                lit.push('{');
            }
            '}' if chars.peek() == Some(&'}') => {
                chars.next();
                lit.push('}');
            }
            '{' => {
                let name: String = chars.by_ref().take_while(|c| *c != '}').collect();
                let slot: Slot = name.parse().map_err(bad)?;
                if !lit.is_empty() {
                    // the one spelling of the speaker name that appears in
                    // the reading-comprehension rows
                    segments.push(Segment::Lit(std::mem::take(&mut lit).replace("Jhon", "John")));
                }
                if matches!(segments.last(), Some(Segment::Slot(_))) {
                    return Err(bad("adjacent slots cannot be parsed back".into()));
                }
                segments.push(Segment::Slot(slot));
            }
            '}' => return Err(bad("unbalanced '}'".into())),
            c => lit.push(c),
        }
    }
    if !lit.is_empty() {
        segments.push(Segment::Lit(lit.replace("Jhon", "John")));
    }
    let mut counts: HashMap<Slot, usize> = HashMap::new();
    for s in &segments {
        if let Segment::Slot(slot) = s {
            *counts.entry(*slot).or_default() += 1;
        }
    }
    for slot in family.required_slots() {
        if counts.get(slot) != Some(&1) {
            return Err(bad(format!("slot {{{slot}}} must appear exactly once")));
        }
    }
    if counts.len() != family.required_slots().len() {
        return Err(bad(format!("family {family} has unexpected slots")));
    }
    Ok(segments)
}

/// Rendering switches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderOptions {
    /// Drop the space in " ?" inside template text. Off by default so
    /// rendered prompts match the catalog verbatim.
    pub normalize_spacing: bool,
}

#[derive(Deserialize)]
struct CatalogFile {
    template: Vec<TemplateEntry>,
}

#[derive(Deserialize)]
struct TemplateEntry {
    id: String,
    family: Family,
    pattern: String,
}

/// An ordered, id-indexed set of templates.
#[derive(Debug, Clone)]
pub struct Catalog {
    templates: Arc<Vec<Template>>,
    index: Arc<HashMap<String, usize>>,
    pub options: RenderOptions,
}

impl Catalog {
    pub fn bundled() -> &'static Catalog {
        &BUNDLED
    }

    pub fn from_templates(templates: Vec<Template>) -> Result<Self, PromptError> {
        let mut index = HashMap::new();
        for (i, t) in templates.iter().enumerate() {
            if index.insert(t.id.clone(), i).is_some() {
                return Err(PromptError::Catalog(format!("duplicate template id {}", t.id)));
            }
        }
        Ok(Self {
            templates: Arc::new(templates),
            index: Arc::new(index),
            options: RenderOptions::default(),
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self, PromptError> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| PromptError::Catalog(e.to_string()))?;
        let templates = file
            .template
            .into_iter()
            .map(|e| Template::new(&e.id, e.family, &e.pattern))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_templates(templates)
    }

    pub fn from_file(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PromptError::Catalog(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn with_options(mut self, options: RenderOptions) -> Self {
        self.options = options;
        self
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn family(&self, family: Family) -> impl Iterator<Item = &Template> {
        self.templates.iter().filter(move |t| t.family == family)
    }

    pub fn get(&self, id: &str) -> Result<&Template, PromptError> {
        self.index
            .get(id)
            .map(|i| &self.templates[*i])
            .ok_or_else(|| PromptError::UnknownTemplate(id.to_string()))
    }

    /// SHA-256 over the ordered `(id, family, pattern)` entries.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in self.templates.iter() {
            h.update(t.id.as_bytes());
            h.update([0]);
            h.update(t.family.as_str().as_bytes());
            h.update([0]);
            h.update(t.pattern.as_bytes());
            h.update([0xff]);
        }
        hex::encode(h.finalize())
    }

    /// Renders template `id` with the given slot values.
    pub fn render(&self, id: &str, values: &BTreeMap<Slot, String>) -> Result<PromptInstance, PromptError> {
        let template = self.get(id)?;
        let rendered = template.render(values, self.options)?;
        let mut slots: BTreeMap<String, String> = values
            .iter()
            .filter(|(slot, _)| template.slots().any(|s| s == **slot))
            .map(|(slot, v)| (slot.as_str().to_string(), v.clone()))
            .collect();
        match template.family {
            Family::EntityPrefix => {
                let prefix = template.render(
                    &BTreeMap::from([(Slot::Entity, "\u{0}".to_string())]),
                    self.options,
                )?;
                let prefix = prefix.trim_start_matches('\u{0}').trim_start();
                slots.insert("prefix".into(), prefix.to_string());
            }
            _ => {
                slots.insert("question".into(), template.question_id().to_string());
            }
        }
        Ok(PromptInstance {
            kind: template.family.kind(),
            template_id: template.id.clone(),
            rendered,
            slots,
        })
    }

    /// Renders the question `question_id` of a tweet family.
    pub fn render_question(
        &self,
        family: Family,
        question_id: &str,
        tweet: &str,
        synopsis: Option<&str>,
    ) -> Result<PromptInstance, PromptError> {
        let id = format!("{family}.{question_id}");
        if !self.index.contains_key(&id) {
            return Err(PromptError::UnknownQuestion {
                family,
                id: question_id.to_string(),
            });
        }
        if tweet.trim().is_empty() {
            return Err(PromptError::EmptyTweet);
        }
        let mut values = BTreeMap::from([(Slot::Tweet, tweet.to_string())]);
        if family == Family::RecordRc {
            let synopsis = synopsis.filter(|s| !s.trim().is_empty()).ok_or(PromptError::EmptySynopsis)?;
            values.insert(Slot::Synopsis, synopsis.to_string());
        }
        self.render(&id, &values)
    }

    /// Inverse of [`Catalog::render`] for the slot values.
    pub fn parse(&self, id: &str, rendered: &str) -> Result<BTreeMap<Slot, String>, PromptError> {
        self.get(id)?.parse(rendered, self.options)
    }
}
