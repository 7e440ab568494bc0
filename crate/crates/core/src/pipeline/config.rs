use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::embedkit::Metric;
use crate::genclient::{DecodingParams, ValidityRules};
use crate::nlpmetrics::Polarity;
use crate::promptkit::{Catalog, PrefixPrompt, PREFIX_PROMPTS};
use crate::report::Role;

/// One run's settings, read from a TOML file. Relative paths resolve
/// against the directory of that file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run_id: String,
    #[serde(default = "default_output_root")]
    pub output_root: PathBuf,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub prompts: PromptConfig,
    #[serde(default)]
    pub generation: GenerationConfig,
    #[serde(default)]
    pub sentiment: SentimentConfig,
    #[serde(default)]
    pub adjectives: AdjectiveConfig,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub annotation: AnnotationConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

fn default_output_root() -> PathBuf {
    PathBuf::from("out")
}

fn default_parallelism() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Line-delimited `{id, text, corpus_tag}` files.
    pub tweets: Vec<PathBuf>,
    pub threshold: f64,
    pub dictionary: Option<PathBuf>,
    pub emoji_map: Option<PathBuf>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            tweets: Vec::new(),
            threshold: 0.70,
            dictionary: None,
            emoji_map: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptConfig {
    pub entities: Vec<String>,
    /// Prefix ids; empty means all eight.
    pub prefixes: Vec<String>,
    /// Tweet template ids rendered for every cleaned tweet.
    pub tweet_templates: Vec<String>,
    /// TOML template catalog replacing the bundled one.
    pub catalog: Option<PathBuf>,
    pub normalize_spacing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub n_target: usize,
    pub max_attempts: usize,
    pub decoding: DecodingParams,
    pub validity: ValidityRules,
    pub backends: Vec<BackendConfig>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            n_target: 10,
            max_attempts: 100,
            decoding: DecodingParams::default(),
            validity: ValidityRules::default(),
            backends: Vec::new(),
        }
    }
}

/// A generation backend: an HTTP endpoint or a scripted mock file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub model_tag: String,
    #[serde(default)]
    pub role: Role,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub mock: Option<PathBuf>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    250
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentimentConfig {
    pub lexicon: Option<PathBuf>,
    /// Remote classifier used instead of the lexicon.
    pub endpoint: Option<String>,
    pub tie: Polarity,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        Self {
            lexicon: None,
            endpoint: None,
            tie: Polarity::Positive,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdjectiveConfig {
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    #[default]
    None,
    /// Seeded hashing embedder, for offline runs.
    Hash,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub backend: EmbeddingKind,
    pub endpoint: Option<String>,
    pub tag: String,
    pub dim: usize,
    pub seed: u64,
    pub metric: Metric,
    pub cache: bool,
    pub timeout_ms: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            backend: EmbeddingKind::None,
            endpoint: None,
            tag: "remote".into(),
            dim: 16,
            seed: 0,
            metric: Metric::Cosine,
            cache: true,
            timeout_ms: 30_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub seed: u64,
    pub normalize: bool,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 10,
            restarts: 10,
            seed: 0,
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationConfig {
    pub bind: String,
    pub ui_dir: Option<PathBuf>,
    pub min_annotators: usize,
}

impl Default for AnnotationConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            ui_dir: None,
            min_annotators: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub extra_precision: bool,
    pub entity_decimals: u32,
    pub csv: bool,
    pub markdown: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            extra_precision: false,
            entity_decimals: 1,
            csv: true,
            markdown: true,
        }
    }
}

/// Environment variable naming the endpoint of generation backend `tag`.
pub fn gen_endpoint_var(tag: &str) -> String {
    let key: String = tag
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect();
    format!("CHARPROBE_GEN_ENDPOINT__{key}")
}

pub const EMBED_ENDPOINT_VAR: &str = "CHARPROBE_EMBED_ENDPOINT";
pub const CLASSIFY_ENDPOINT_VAR: &str = "CHARPROBE_CLASSIFY_ENDPOINT";

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Canonical TOML text: fields in declaration order, defaults filled in.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`Self::canonical`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Replaces backend endpoints with values from `var`. A generation
    /// override also drops that backend's mock.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        for b in &mut self.generation.backends {
            if let Some(endpoint) = var(&gen_endpoint_var(&b.model_tag)) {
                b.endpoint = Some(endpoint);
                b.mock = None;
            }
        }
        if let Some(endpoint) = var(EMBED_ENDPOINT_VAR) {
            self.embedding.endpoint = Some(endpoint);
            self.embedding.backend = EmbeddingKind::Http;
        }
        if let Some(endpoint) = var(CLASSIFY_ENDPOINT_VAR) {
            self.sentiment.endpoint = Some(endpoint);
        }
    }

    /// Selected prefix-prompts in canonical order.
    pub fn prefixes(&self) -> Result<Vec<PrefixPrompt>, PipelineError> {
        if self.prompts.prefixes.is_empty() {
            return Ok(PREFIX_PROMPTS.to_vec());
        }
        let mut out = self
            .prompts
            .prefixes
            .iter()
            .map(|id| PrefixPrompt::by_id(id).map_err(|e| PipelineError::Invalid(vec![e.to_string()])))
            .collect::<Result<Vec<_>, _>>()?;
        out.sort_by_key(PrefixPrompt::order);
        out.dedup();
        Ok(out)
    }

    /// Every problem with the config; empty when it is usable.
    pub fn problems(&self, catalog: &Catalog) -> Vec<String> {
        let mut p = Vec::new();
        if !valid_name(&self.run_id) {
            p.push(format!("run_id {:?} must be non-empty [A-Za-z0-9._-]", self.run_id));
        }
        if self.parallelism == 0 {
            p.push("parallelism must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.corpus.threshold) {
            p.push(format!("corpus.threshold {} is outside [0, 1]", self.corpus.threshold));
        }
        for id in &self.prompts.prefixes {
            if PrefixPrompt::by_id(id).is_err() {
                p.push(format!("unknown prefix id {id}"));
            }
        }
        for id in &self.prompts.tweet_templates {
            match catalog.get(id) {
                Ok(t) if t.family.kind() == crate::promptkit::PromptKind::EntityPrefix => {
                    p.push(format!("template {id} is an entity template"))
                }
                Ok(_) => {}
                Err(_) => p.push(format!("unknown tweet template id {id}")),
            }
        }
        for e in &self.prompts.entities {
            if e.trim().is_empty() {
                p.push("entity names must be non-empty".into());
            }
        }
        let g = &self.generation;
        if g.n_target == 0 {
            p.push("generation.n_target must be at least 1".into());
        }
        if g.max_attempts < g.n_target {
            p.push(format!(
                "generation.max_attempts {} is below n_target {}",
                g.max_attempts, g.n_target
            ));
        }
        if let Err(e) = g.decoding.validate() {
            p.push(e.to_string());
        }
        if !(0.0..=1.0).contains(&g.validity.english_threshold) {
            p.push(format!(
                "generation.validity.english_threshold {} is outside [0, 1]",
                g.validity.english_threshold
            ));
        }
        let mut tags: Vec<&str> = Vec::new();
        for b in &g.backends {
            if !valid_name(&b.model_tag) {
                p.push(format!("model_tag {:?} must be non-empty [A-Za-z0-9._-]", b.model_tag));
            }
            if tags.contains(&b.model_tag.as_str()) {
                p.push(format!("model_tag {} is repeated", b.model_tag));
            }
            tags.push(&b.model_tag);
            match (&b.endpoint, &b.mock) {
                (None, None) => p.push(format!("backend {} needs an endpoint or a mock", b.model_tag)),
                (Some(_), Some(_)) => p.push(format!("backend {} has both an endpoint and a mock", b.model_tag)),
                _ => {}
            }
        }
        if g.backends.iter().filter(|b| b.role == Role::Reference).count() > 1 {
            p.push("at most one backend may have role reference".into());
        }
        let e = &self.embedding;
        match e.backend {
            EmbeddingKind::Http if e.endpoint.is_none() => p.push("embedding.backend http needs an endpoint".into()),
            EmbeddingKind::Hash if e.dim == 0 => p.push("embedding.dim must be at least 1".into()),
            _ => {}
        }
        let c = &self.clustering;
        if c.k_min < 2 || c.k_max < c.k_min {
            p.push(format!("clustering k range {}..={} must satisfy 2 <= k_min <= k_max", c.k_min, c.k_max));
        }
        if c.restarts == 0 {
            p.push("clustering.restarts must be at least 1".into());
        }
        if !(1..=2).contains(&self.report.entity_decimals) {
            p.push("report.entity_decimals must be 1 or 2".into());
        }
        if self.annotation.min_annotators == 0 {
            p.push("annotation.min_annotators must be at least 1".into());
        }
        p
    }
}

/// A config together with the directory its relative paths start from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base: PathBuf,
    pub catalog: Catalog,
}

impl LoadedConfig {
    /// Reads `path`, applies environment overrides and validates.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        Self::load_with(path, |_| {})
    }

    /// [`Self::load`] with `overrides` applied after the environment and
    /// before validation.
    pub fn load_with(path: &Path, overrides: impl FnOnce(&mut RunConfig)) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|_| PipelineError::MissingPath(path.to_path_buf()))?;
        let mut config = RunConfig::from_toml_str(&text)?;
        config.apply_env(|k| std::env::var(k).ok());
        overrides(&mut config);
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(config, base)
    }

    /// Validates `config`; nothing is read from or written to disk apart
    /// from a custom template catalog.
    pub fn new(config: RunConfig, base: PathBuf) -> Result<Self, PipelineError> {
        let catalog = match &config.prompts.catalog {
            Some(p) => {
                let path = base.join(p);
                if !path.exists() {
                    return Err(PipelineError::MissingPath(path));
                }
                Catalog::from_file(&path)?
            }
            None => Catalog::bundled().clone(),
        };
        let catalog = catalog.with_options(crate::promptkit::RenderOptions {
            normalize_spacing: config.prompts.normalize_spacing,
        });
        let problems = config.problems(&catalog);
        if !problems.is_empty() {
            return Err(PipelineError::Invalid(problems));
        }
        Ok(Self { config, base, catalog })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base.join(p)
    }

    /// `{output_root}/runs/{run_id}`.
    pub fn run_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_root).join("runs").join(&self.config.run_id)
    }

    /// `{output_root}/reports`; tables go to `{reports_root}/{run_id}/`.
    pub fn reports_root(&self) -> PathBuf {
        self.resolve(&self.config.output_root).join("reports")
    }

    pub fn clean_path(&self) -> PathBuf {
        self.run_dir().join("clean").join("tweets.jsonl")
    }

    pub fn gen_dir(&self) -> PathBuf {
        self.run_dir().join("gen")
    }

    pub fn evaluation_path(&self) -> PathBuf {
        self.run_dir().join("evaluation.json")
    }

    pub fn annotation_log(&self) -> PathBuf {
        self.run_dir().join("annotations.jsonl")
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.run_dir().join("embed-cache")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
run_id = "r1"

[prompts]
entities = ["P1", "P2"]

[[generation.backends]]
model_tag = "fd"
mock = "fd.json"
"#;

    fn load(text: &str) -> Result<LoadedConfig, PipelineError> {
        LoadedConfig::new(RunConfig::from_toml_str(text)?, PathBuf::from("."))
    }

    #[test]
    fn defaults_fill_in() {
        let c = load(MINIMAL).unwrap().config;
        assert_eq!(c.corpus.threshold, 0.70);
        assert_eq!(c.generation.n_target, 10);
        assert_eq!(c.clustering.k_max, 10);
        assert_eq!(c.prefixes().unwrap().len(), 8);
        assert_eq!(c.generation.backends[0].role, Role::Adapted);
    }

    #[test]
    fn canonical_form_round_trips_and_hashes_stably() {
        let c = load(MINIMAL).unwrap().config;
        let again = RunConfig::from_toml_str(&c.canonical()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        let spaced = MINIMAL.replace("run_id = \"r1\"", "run_id    =   \"r1\"   # same");
        assert_eq!(RunConfig::from_toml_str(&spaced).unwrap().hash(), c.hash());
    }

    #[test]
    fn threshold_above_one_is_rejected() {
        let text = format!("{MINIMAL}\n[corpus]\nthreshold = 1.01\n");
        match load(&text) {
            Err(PipelineError::Invalid(p)) => assert!(p[0].contains("1.01")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_problem_is_listed() {
        let text = r#"
run_id = "bad id"
[prompts]
prefixes = ["nope"]
tweet_templates = ["bool_q.advocacy", "bool_q.nope"]
[generation]
n_target = 5
max_attempts = 2
[[generation.backends]]
model_tag = "a"
[[generation.backends]]
model_tag = "a"
mock = "x"
endpoint = "http://x"
[clustering]
k_min = 1
"#;
        let Err(PipelineError::Invalid(p)) = load(text) else { panic!() };
        let all = p.join("\n");
        for needle in ["run_id", "unknown prefix id nope", "bool_q.nope", "max_attempts", "needs an endpoint", "repeated", "both", "k range"] {
            assert!(all.contains(needle), "{needle} missing from {all}");
        }
        assert!(!all.contains("bool_q.advocacy"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            RunConfig::from_toml_str("run_id = \"x\"\nthreshhold = 0.5\n"),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn env_overrides_endpoints() {
        let mut c = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(gen_endpoint_var("fd-gpt2.v1"), "CHARPROBE_GEN_ENDPOINT__FD_GPT2_V1");
        c.apply_env(|k| match k {
            "CHARPROBE_GEN_ENDPOINT__FD" => Some("http://gen".into()),
            EMBED_ENDPOINT_VAR => Some("http://emb".into()),
            _ => None,
        });
        let b = &c.generation.backends[0];
        assert_eq!(b.endpoint.as_deref(), Some("http://gen"));
        assert!(b.mock.is_none());
        assert_eq!(c.embedding.backend, EmbeddingKind::Http);
        assert!(c.sentiment.endpoint.is_none());
    }
}
