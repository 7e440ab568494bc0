//! Text-generation backends and the generate-until-valid loop.
//!
//! A backend turns a [`GenerationRequest`] into a continuation. The HTTP
//! client [`BackendHandle`] speaks the `POST {endpoint}/generate` protocol;
//! [`ScriptedBackend`] answers from a fixture for tests and demos.
//! [`collect_valid`] keeps generating for one prompt until enough
//! continuations pass the validity rule, and [`run_experiment`] does that
//! for a batch of prompts with bounded parallelism, persisting every
//! attempt.

mod http;
mod scripted;
mod store;
pub mod validity;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::EnglishDictionary;
use crate::promptkit::PromptInstance;

pub use http::{BackendHandle, BackendSpec};
pub use scripted::{ScriptRule, ScriptedBackend, ScriptedFault, Selection};
pub use store::{read_entailments, read_manifest, EntailmentStore, StoreError};
pub use validity::{is_valid_entailment, Reason, ValidityRules, Verdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("backend {endpoint} unreachable after {attempts} attempts: {reason}")]
    BackendUnreachable {
        endpoint: String,
        attempts: u32,
        reason: String,
    },
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("backend {endpoint} timed out after {attempts} attempts")]
    Timeout { endpoint: String, attempts: u32 },
    #[error("backend returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid backend settings: {0}")]
    InvalidBackend(String),
    #[error("{valid} of {target} valid outputs after {attempts} attempts")]
    AttemptsExhausted { valid: usize, target: usize, attempts: usize },
    #[error("no prompts to run")]
    NoPrompts,
    #[error("store: {0}")]
    Store(String),
}

/// Decoding parameters shared by every request of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingParams {
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    /// Base seed; each attempt gets a seed derived from this, the prompt
    /// and the attempt index. `None` sends `null`.
    pub seed: Option<u64>,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self {
            max_new_tokens: 40,
            temperature: 0.9,
            top_p: 0.95,
            seed: Some(0),
        }
    }
}

impl DecodingParams {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.max_new_tokens < 1 {
            return Err(GenError::InvalidRequest("max_new_tokens must be at least 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GenError::InvalidRequest(format!("temperature {} is negative", self.temperature)));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(GenError::InvalidRequest(format!("top_p {} is outside (0, 1]", self.top_p)));
        }
        Ok(())
    }

    /// The request for attempt `attempt` (1-based) of `prompt`.
    pub fn request(&self, prompt: &str, attempt: usize) -> GenerationRequest {
        GenerationRequest {
            prompt: prompt.to_string(),
            max_new_tokens: self.max_new_tokens,
            temperature: self.temperature,
            top_p: self.top_p,
            seed: self.seed.map(|base| attempt_seed(base, prompt, attempt)),
        }
    }
}

/// Derives a per-attempt seed that is stable across platforms.
pub fn attempt_seed(base: u64, prompt: &str, attempt: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(prompt.as_bytes());
    h.update((attempt as u64).to_le_bytes());
    let digest = h.finalize();
    // keep seeds within the range JSON numbers carry exactly
    u64::from_le_bytes(digest[..8].try_into().unwrap()) >> 11
}

/// Body of `POST {endpoint}/generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub seed: Option<u64>,
}

impl GenerationRequest {
    pub fn validate(&self) -> Result<(), GenError> {
        DecodingParams {
            max_new_tokens: self.max_new_tokens,
            temperature: self.temperature,
            top_p: self.top_p,
            seed: self.seed,
        }
        .validate()
    }
}

/// Something that continues a prompt.
pub trait GenerationBackend: Send + Sync {
    fn model_tag(&self) -> &str;

    /// Returns the continuation only, with any echoed prompt removed.
    fn generate(&self, req: &GenerationRequest) -> Result<String, GenError>;
}

/// Removes an echoed prompt from a backend response. The response is only
/// changed when it starts with the whole prompt; the whitespace that
/// separated prompt and continuation is dropped too.
pub fn strip_prompt<'a>(prompt: &str, response: &'a str) -> &'a str {
    let prompt_trimmed = prompt.trim_end();
    if prompt_trimmed.is_empty() {
        return response;
    }
    match response
        .strip_prefix(prompt)
        .or_else(|| response.strip_prefix(prompt_trimmed))
    {
        Some(rest) => rest.trim_start(),
        None => response,
    }
}

/// One generated continuation of one prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entailment {
    /// `{model_tag}/{prompt_index:04}/{attempt_index:02}`.
    pub id: String,
    /// [`PromptInstance::key`] of the prompt.
    pub prompt_ref: String,
    pub template_id: String,
    pub prompt_index: usize,
    pub text: String,
    pub model_tag: String,
    /// 1-based issue order within the prompt.
    pub attempt_index: usize,
    pub seed: Option<u64>,
    pub valid: bool,
    pub reason: Reason,
}

impl Entailment {
    pub fn make_id(model_tag: &str, prompt_index: usize, attempt_index: usize) -> String {
        format!("{model_tag}/{prompt_index:04}/{attempt_index:02}")
    }
}

/// Every attempt made for one prompt, in issue order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Collection {
    pub n_target: usize,
    pub attempts: Vec<Entailment>,
}

impl Collection {
    pub fn valid(&self) -> impl Iterator<Item = &Entailment> {
        self.attempts.iter().filter(|e| e.valid)
    }

    pub fn valid_count(&self) -> usize {
        self.valid().count()
    }

    pub fn attempt_count(&self) -> usize {
        self.attempts.len()
    }

    /// Attempts that did not yield a valid output.
    pub fn fail_count(&self) -> usize {
        self.attempt_count() - self.valid_count()
    }

    pub fn is_complete(&self) -> bool {
        self.valid_count() == self.n_target
    }
}

/// A [`collect_valid`] run that stopped early; `partial` keeps what was
/// generated before the stop.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{cause}")]
pub struct CollectError {
    pub cause: GenError,
    pub partial: Collection,
}

/// Settings of the generate-until-valid loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectSettings {
    pub n_target: usize,
    pub max_attempts: usize,
    pub params: DecodingParams,
    pub rules: ValidityRules,
}

impl Default for CollectSettings {
    fn default() -> Self {
        Self {
            n_target: 10,
            max_attempts: 100,
            params: DecodingParams::default(),
            rules: ValidityRules::default(),
        }
    }
}

impl CollectSettings {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.n_target < 1 {
            return Err(GenError::InvalidRequest("n_target must be at least 1".into()));
        }
        if self.max_attempts < self.n_target {
            return Err(GenError::InvalidRequest(format!(
                "max_attempts {} is below n_target {}",
                self.max_attempts, self.n_target
            )));
        }
        self.params.validate()
    }
}

/// Generates continuations of `prompt` in issue order until
/// `settings.n_target` are valid or `settings.max_attempts` were made.
pub fn collect_valid(
    backend: &dyn GenerationBackend,
    prompt: &PromptInstance,
    prompt_index: usize,
    settings: &CollectSettings,
    dictionary: &EnglishDictionary,
) -> Result<Collection, CollectError> {
    let mut collection = Collection {
        n_target: settings.n_target,
        attempts: Vec::new(),
    };
    if let Err(cause) = settings.validate() {
        return Err(CollectError {
            cause,
            partial: collection,
        });
    }
    let mut valid = 0;
    for attempt in 1..=settings.max_attempts {
        let req = settings.params.request(&prompt.rendered, attempt);
        let text = match backend.generate(&req) {
            Ok(text) => text,
            Err(cause) => {
                return Err(CollectError {
                    cause,
                    partial: collection,
                })
            }
        };
        let verdict = validity::check(&text, dictionary, &settings.rules);
        valid += usize::from(verdict.valid);
        collection.attempts.push(Entailment {
            id: Entailment::make_id(backend.model_tag(), prompt_index, attempt),
            prompt_ref: prompt.key(),
            template_id: prompt.template_id.clone(),
            prompt_index,
            text,
            model_tag: backend.model_tag().to_string(),
            attempt_index: attempt,
            seed: req.seed,
            valid: verdict.valid,
            reason: verdict.reason,
        });
        if valid == settings.n_target {
            return Ok(collection);
        }
    }
    Err(CollectError {
        cause: GenError::AttemptsExhausted {
            valid,
            target: settings.n_target,
            attempts: settings.max_attempts,
        },
        partial: collection,
    })
}

/// Final state of one prompt in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStatus {
    Complete,
    Exhausted,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptOutcome {
    pub prompt_index: usize,
    pub prompt_ref: String,
    pub template_id: String,
    pub status: PromptStatus,
    pub valid: usize,
    pub fail_count: usize,
    pub attempts: usize,
    pub error: Option<String>,
}

/// Provenance of one [`run_experiment`] call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub model_tag: String,
    pub settings: CollectSettings,
    pub catalog_hash: String,
    pub prompts: Vec<PromptOutcome>,
}

impl RunManifest {
    pub fn failed(&self) -> impl Iterator<Item = &PromptOutcome> {
        self.prompts.iter().filter(|p| p.status == PromptStatus::Failed)
    }

    pub fn all_failed(&self) -> bool {
        self.prompts.iter().all(|p| p.status == PromptStatus::Failed)
    }

    /// Fail counts summed per template id, in first-appearance order.
    pub fn fail_counts(&self) -> Vec<(String, usize)> {
        let mut order: Vec<String> = Vec::new();
        let mut sums: BTreeMap<String, usize> = BTreeMap::new();
        for p in &self.prompts {
            if !sums.contains_key(&p.template_id) {
                order.push(p.template_id.clone());
            }
            *sums.entry(p.template_id.clone()).or_default() += p.fail_count;
        }
        order.into_iter().map(|id| {
            let n = sums[&id];
            (id, n)
        }).collect()
    }
}

/// Runs [`collect_valid`] for every prompt using up to `parallelism`
/// worker threads. Attempts are appended to `store` in prompt order, so the
/// store contents do not depend on scheduling. A prompt whose backend
/// fails is marked [`PromptStatus::Failed`] and the run continues.
pub fn run_experiment(
    backend: &dyn GenerationBackend,
    prompts: &[PromptInstance],
    settings: &CollectSettings,
    dictionary: &EnglishDictionary,
    parallelism: usize,
    catalog_hash: &str,
    store: &EntailmentStore,
) -> Result<RunManifest, GenError> {
    if prompts.is_empty() {
        return Err(GenError::NoPrompts);
    }
    settings.validate()?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Collection, CollectError>>>> =
        Mutex::new(vec![None; prompts.len()]);
    let flushed = Mutex::new(0usize);
    let store_error: Mutex<Option<GenError>> = Mutex::new(None);

    let flush_ready = || {
        let mut written = flushed.lock().unwrap();
        let mut results = results.lock().unwrap();
        while *written < prompts.len() {
            let Some(result) = &results[*written] else { break };
            let attempts = match result {
                Ok(c) => &c.attempts,
                Err(e) => &e.partial.attempts,
            };
            if let Err(e) = store.append_all(attempts) {
                store_error.lock().unwrap().get_or_insert(GenError::Store(e.to_string()));
            }
            // keep the outcome, drop the texts
            let slim = match results[*written].take().unwrap() {
                Ok(c) => Ok(slim_collection(c)),
                Err(e) => Err(CollectError {
                    cause: e.cause,
                    partial: slim_collection(e.partial),
                }),
            };
            results[*written] = Some(slim);
            *written += 1;
        }
    };

    std::thread::scope(|scope| {
        for _ in 0..parallelism.clamp(1, prompts.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= prompts.len() {
                    break;
                }
                let result = collect_valid(backend, &prompts[i], i, settings, dictionary);
                results.lock().unwrap()[i] = Some(result);
                flush_ready();
            });
        }
    });
    flush_ready();
    if let Some(e) = store_error.into_inner().unwrap() {
        return Err(e);
    }

    let results = results.into_inner().unwrap();
    let outcomes = prompts
        .iter()
        .zip(results)
        .enumerate()
        .map(|(i, (prompt, result))| {
            let (collection, status, error) = match result.expect("every prompt was processed") {
                Ok(c) => (c, PromptStatus::Complete, None),
                Err(CollectError {
                    cause: cause @ GenError::AttemptsExhausted { .. },
                    partial,
                }) => (partial, PromptStatus::Exhausted, Some(cause.to_string())),
                Err(e) => (e.partial, PromptStatus::Failed, Some(e.cause.to_string())),
            };
            PromptOutcome {
                prompt_index: i,
                prompt_ref: prompt.key(),
                template_id: prompt.template_id.clone(),
                status,
                valid: collection.valid_count(),
                fail_count: collection.fail_count(),
                attempts: collection.attempt_count(),
                error,
            }
        })
        .collect();
    let manifest = RunManifest {
        model_tag: backend.model_tag().to_string(),
        settings: *settings,
        catalog_hash: catalog_hash.to_string(),
        prompts: outcomes,
    };
    store
        .write_manifest(&manifest)
        .map_err(|e| GenError::Store(e.to_string()))?;
    Ok(manifest)
}

fn slim_collection(c: Collection) -> Collection {
    Collection {
        n_target: c.n_target,
        attempts: c
            .attempts
            .into_iter()
            .map(|mut e| {
                e.text.clear();
                e
            })
            .collect(),
    }
}
