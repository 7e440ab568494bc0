//! A generation backend that answers from a script instead of a model.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{strip_prompt, GenError, GenerationBackend, GenerationRequest};

/// How a rule picks among its responses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// The n-th request for a prompt gets response `n mod len`.
    #[default]
    Cycle,
    /// The request seed picks the response; requests without a seed cycle.
    Seed,
}

/// Error a rule injects instead of answering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedFault {
    Unreachable,
    Timeout,
    Malformed,
}

/// Prompts matching `pattern` get `responses`, or fail with `fault`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptRule {
    pub pattern: String,
    #[serde(default)]
    pub responses: Vec<String>,
    #[serde(default)]
    pub fault: Option<ScriptedFault>,
}

impl ScriptRule {
    pub fn respond(pattern: &str, responses: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            pattern: pattern.to_string(),
            responses: responses.into_iter().map(Into::into).collect(),
            fault: None,
        }
    }

    pub fn fault(pattern: &str, fault: ScriptedFault) -> Self {
        Self {
            pattern: pattern.to_string(),
            responses: Vec::new(),
            fault: Some(fault),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScriptFile {
    model_tag: String,
    #[serde(default)]
    echo_prompt: bool,
    #[serde(default)]
    selection: Selection,
    #[serde(default)]
    rules: Vec<ScriptRule>,
    #[serde(default)]
    default: Vec<String>,
}

/// Deterministic backend driven by pattern rules. The first rule whose
/// regex matches the prompt answers; prompts no rule matches get the
/// default responses.
#[derive(Debug)]
pub struct ScriptedBackend {
    model_tag: String,
    echo_prompt: bool,
    selection: Selection,
    rules: Vec<(Regex, ScriptRule)>,
    default: Vec<String>,
    counters: Mutex<HashMap<String, usize>>,
}

impl ScriptedBackend {
    pub fn from_rules(model_tag: &str, rules: Vec<ScriptRule>, default: Vec<String>) -> Result<Self, GenError> {
        super::store::check_tag(model_tag).map_err(|e| GenError::InvalidBackend(e.to_string()))?;
        let rules = rules
            .into_iter()
            .map(|r| {
                let re = Regex::new(&r.pattern)
                    .map_err(|e| GenError::InvalidBackend(format!("pattern {:?}: {e}", r.pattern)))?;
                if r.fault.is_none() && r.responses.is_empty() {
                    return Err(GenError::InvalidBackend(format!("rule {:?} has no responses", r.pattern)));
                }
                Ok((re, r))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            model_tag: model_tag.to_string(),
            echo_prompt: false,
            selection: Selection::Cycle,
            rules,
            default,
            counters: Mutex::new(HashMap::new()),
        })
    }

    /// Always answers `text`.
    pub fn constant(model_tag: &str, text: &str) -> Self {
        Self::cycle(model_tag, [text])
    }

    /// Answers every prompt with `texts` in turn.
    pub fn cycle(model_tag: &str, texts: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self::from_rules(model_tag, Vec::new(), texts.into_iter().map(Into::into).collect())
            .expect("valid tag")
    }

    /// Reads a JSON script:
    /// `{"model_tag", "echo_prompt", "selection", "rules": [{"pattern", "responses", "fault"}], "default"}`.
    pub fn from_json(text: &str) -> Result<Self, GenError> {
        let file: ScriptFile =
            serde_json::from_str(text).map_err(|e| GenError::InvalidBackend(format!("script: {e}")))?;
        let mut backend = Self::from_rules(&file.model_tag, file.rules, file.default)?;
        backend.echo_prompt = file.echo_prompt;
        backend.selection = file.selection;
        Ok(backend)
    }

    pub fn from_file(path: &Path) -> Result<Self, GenError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GenError::InvalidBackend(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn with_echo(mut self, echo: bool) -> Self {
        self.echo_prompt = echo;
        self
    }

    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_tag(mut self, model_tag: &str) -> Self {
        self.model_tag = model_tag.to_string();
        self
    }

    /// The raw response, including the echoed prompt when echo is on.
    pub fn respond(&self, req: &GenerationRequest) -> Result<String, GenError> {
        req.validate()?;
        let (idx, responses) = match self.rules.iter().enumerate().find(|(_, (re, _))| re.is_match(&req.prompt)) {
            Some((i, (_, rule))) => {
                if let Some(fault) = rule.fault {
                    return Err(fault_error(fault));
                }
                (i, &rule.responses)
            }
            None => (self.rules.len(), &self.default),
        };
        if responses.is_empty() {
            return Err(GenError::MalformedResponse(format!("no scripted response for {:?}", req.prompt)));
        }
        let n = {
            let mut counters = self.counters.lock().unwrap();
            let c = counters.entry(format!("{idx}\u{0}{}", req.prompt)).or_default();
            *c += 1;
            *c - 1
        };
        let pick = match (self.selection, req.seed) {
            (Selection::Seed, Some(seed)) => (seed % responses.len() as u64) as usize,
            _ => n % responses.len(),
        };
        let text = &responses[pick];
        Ok(if self.echo_prompt {
            format!("{} {}", req.prompt, text)
        } else {
            text.clone()
        })
    }
}

fn fault_error(fault: ScriptedFault) -> GenError {
    match fault {
        ScriptedFault::Unreachable => GenError::BackendUnreachable {
            endpoint: "scripted".into(),
            attempts: 1,
            reason: "scripted fault".into(),
        },
        ScriptedFault::Timeout => GenError::Timeout {
            endpoint: "scripted".into(),
            attempts: 1,
        },
        ScriptedFault::Malformed => GenError::MalformedResponse("scripted fault".into()),
    }
}

impl GenerationBackend for ScriptedBackend {
    fn model_tag(&self) -> &str {
        &self.model_tag
    }

    fn generate(&self, req: &GenerationRequest) -> Result<String, GenError> {
        let raw = self.respond(req)?;
        Ok(strip_prompt(&req.prompt, &raw).to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genclient::DecodingParams;

    fn req(prompt: &str, attempt: usize) -> GenerationRequest {
        DecodingParams::default().request(prompt, attempt)
    }

    #[test]
    fn pass_through_and_echo_stripping() {
        let b = ScriptedBackend::constant("m", "kind person");
        assert_eq!(b.generate(&req("Jane is a very", 1)).unwrap(), "kind person");
        let b = b.with_echo(true);
        assert_eq!(b.respond(&req("Jane is a very", 1)).unwrap(), "Jane is a very kind person");
        assert_eq!(b.generate(&req("Jane is a very", 1)).unwrap(), "kind person");
    }

    #[test]
    fn rules_cycle_per_prompt() {
        let b = ScriptedBackend::from_rules("m", vec![ScriptRule::respond("^Jane", ["a", "b"])], vec!["z".into()]).unwrap();
        let got: Vec<_> = ["Jane x", "Jane y", "Jane x", "Bob", "Jane x"]
            .iter()
            .map(|p| b.generate(&req(p, 1)).unwrap())
            .collect();
        assert_eq!(got, ["a", "a", "b", "z", "a"]);
    }

    #[test]
    fn seed_selection_is_order_free() {
        let script = r#"{"model_tag": "m", "selection": "seed", "default": ["a", "b", "c"]}"#;
        let b1 = ScriptedBackend::from_json(script).unwrap();
        let b2 = ScriptedBackend::from_json(script).unwrap();
        let forward: Vec<_> = (1..=6).map(|i| b1.generate(&req("p", i)).unwrap()).collect();
        let mut backward: Vec<_> = (1..=6).rev().map(|i| b2.generate(&req("p", i)).unwrap()).collect();
        backward.reverse();
        assert_eq!(forward, backward);
    }

    #[test]
    fn faults_and_bad_scripts() {
        let b = ScriptedBackend::from_rules("m", vec![ScriptRule::fault("x", ScriptedFault::Timeout)], vec![]).unwrap();
        assert!(matches!(b.generate(&req("x", 1)), Err(GenError::Timeout { .. })));
        assert!(matches!(b.generate(&req("y", 1)), Err(GenError::MalformedResponse(_))));
        assert!(ScriptedBackend::from_json("{}").is_err());
        assert!(ScriptedBackend::from_rules("m", vec![ScriptRule::respond("(", ["a"])], vec![]).is_err());
    }
}
