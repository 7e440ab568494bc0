//! The end-to-end run: clean, generate, evaluate, annotate and report.
//!
//! Every command takes a validated [`LoadedConfig`], so a bad config is
//! rejected before anything is written. Run artifacts live under
//! `{output_root}/runs/{run_id}/` and report tables under
//! `{output_root}/reports/{run_id}/`.

mod config;

pub use config::{
    gen_endpoint_var, AdjectiveConfig, AnnotationConfig, BackendConfig, ClusteringConfig, CorpusConfig,
    EmbeddingConfig, EmbeddingKind, GenerationConfig, LoadedConfig, PromptConfig, ReportConfig, RunConfig,
    SentimentConfig, CLASSIFY_ENDPOINT_VAR, EMBED_ENDPOINT_VAR,
};

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotation::{self, AnnotationError, AnnotationStore, RelevanceSummary, ServiceState, Task};
use crate::clusterlab::{kmeans_with, l2_normalize, select_k, ClusterError, KMeansConfig};
use crate::corpus::{
    filter_tweets, read_clean_tweets, read_tweets, write_clean_tweets, Cleaner, CorpusError, EmojiMap,
    EnglishDictionary, PunctuationSet, RejectionTally, SkippedRecord,
};
use crate::embedkit::{self, centroid_distance, CachedEmbedder, EmbedError, EmbeddingBackend, HashEmbedder, HttpEmbedder};
use crate::genclient::{
    read_entailments, read_manifest, run_experiment, BackendHandle, BackendSpec, CollectSettings, EntailmentStore,
    GenError, GenerationBackend, RunManifest, ScriptedBackend, StoreError,
};
use crate::nlpmetrics::{
    AdjectiveLexicon, AdjectiveTagger, LexiconSentiment, LexiconTagger, MetricsError, RemoteClassifier,
    SentimentBackend, SentimentLexicon,
};
use crate::promptkit::{render_entity_prompt, Concept, Entity, Family, PrefixPrompt, PromptError, PromptInstance, PREFIX_PROMPTS};
use crate::report::{
    build_bundle, emit, BuildOptions, ClusterSummary, EmitOptions, EvalItem, Evaluation, FailCount,
    PrefixDistances, Provenance, ReportBundle, ReportError, Role,
};
use crate::server::ServerHandle;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("no such file or directory: {}", .0.display())]
    MissingPath(PathBuf),
    #[error("{0}")]
    Empty(String),
    #[error("every prompt failed on every backend")]
    AllPromptsFailed,
    #[error("nothing to report for run {0}")]
    NothingToReport(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn require(path: PathBuf) -> Result<PathBuf, PipelineError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(PipelineError::MissingPath(path))
    }
}

fn create_parent(path: &Path) -> Result<(), PipelineError> {
    match path.parent() {
        Some(dir) => std::fs::create_dir_all(dir).map_err(io_err(dir)),
        None => Ok(()),
    }
}

fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn dictionary(cfg: &LoadedConfig) -> Result<EnglishDictionary, PipelineError> {
    match &cfg.config.corpus.dictionary {
        Some(p) => Ok(EnglishDictionary::from_file(&require(cfg.resolve(p))?)?),
        None => Ok(EnglishDictionary::bundled()),
    }
}

#[derive(Debug, Clone)]
pub struct CleanOutcome {
    pub path: PathBuf,
    pub input: usize,
    pub kept: usize,
    pub tally: RejectionTally,
    pub skipped: Vec<SkippedRecord>,
}

/// Cleans and filters every configured tweet file into one cleaned file.
/// Fails without writing when no tweet survives.
pub fn cmd_clean(cfg: &LoadedConfig) -> Result<CleanOutcome, PipelineError> {
    let c = &cfg.config.corpus;
    if c.tweets.is_empty() {
        return Err(PipelineError::Invalid(vec!["corpus.tweets lists no files".into()]));
    }
    let paths = c
        .tweets
        .iter()
        .map(|p| require(cfg.resolve(p)))
        .collect::<Result<Vec<_>, _>>()?;
    let emoji = match &c.emoji_map {
        Some(p) => EmojiMap::from_file(&require(cfg.resolve(p))?)?,
        None => EmojiMap::bundled(),
    };
    let cleaner = Cleaner::new(emoji, PunctuationSet::default());
    let dict = dictionary(cfg)?;
    let mut raws = Vec::new();
    let mut skipped = Vec::new();
    for p in &paths {
        let ingest = read_tweets(p)?;
        raws.extend(ingest.tweets);
        skipped.extend(ingest.skipped);
    }
    let outcome = filter_tweets(&raws, c.threshold, &cleaner, &dict)?;
    if outcome.kept.is_empty() {
        return Err(PipelineError::Empty(format!(
            "no tweet survived cleaning ({} empty, {} below the English threshold)",
            outcome.tally.empty, outcome.tally.ratio
        )));
    }
    let path = cfg.clean_path();
    create_parent(&path)?;
    write_clean_tweets(&path, &outcome.kept)?;
    let tally_path = path.with_file_name("tally.json");
    let tally = serde_json::json!({
        "input": raws.len(),
        "kept": outcome.kept.len(),
        "rejected_empty": outcome.tally.empty,
        "rejected_ratio": outcome.tally.ratio,
        "skipped_records": skipped.len(),
    });
    std::fs::write(&tally_path, format!("{tally:#}\n")).map_err(io_err(&tally_path))?;
    Ok(CleanOutcome {
        path,
        input: raws.len(),
        kept: outcome.kept.len(),
        tally: outcome.tally,
        skipped,
    })
}

/// Entity prompts in (entity, prefix) order, then tweet prompts in
/// (tweet, template) order.
pub fn build_prompts(cfg: &LoadedConfig) -> Result<Vec<PromptInstance>, PipelineError> {
    let mut prompts = Vec::new();
    let prefixes = cfg.config.prefixes()?;
    for name in &cfg.config.prompts.entities {
        let entity = Entity::new(name.clone(), "")?;
        for prefix in &prefixes {
            prompts.push(render_entity_prompt(&entity, prefix)?);
        }
    }
    let templates = &cfg.config.prompts.tweet_templates;
    if !templates.is_empty() {
        let tweets = read_clean_tweets(&require(cfg.clean_path())?)?;
        for tweet in &tweets {
            for id in templates {
                let t = cfg.catalog.get(id)?;
                let synopsis = match t.family {
                    Family::RecordRc => Some(Concept::from_str(t.question_id())?.placeholder_synopsis()),
                    _ => None,
                };
                let mut p = cfg.catalog.render_question(t.family, t.question_id(), &tweet.text, synopsis)?;
                p.slots.insert("tweet_id".into(), tweet.id.clone());
                prompts.push(p);
            }
        }
    }
    Ok(prompts)
}

fn generation_backend(cfg: &LoadedConfig, b: &BackendConfig) -> Result<Box<dyn GenerationBackend>, PipelineError> {
    match (&b.mock, &b.endpoint) {
        (Some(mock), _) => {
            let path = require(cfg.resolve(mock))?;
            Ok(Box::new(ScriptedBackend::from_file(&path)?.with_tag(&b.model_tag)))
        }
        (None, Some(endpoint)) => Ok(Box::new(BackendHandle::from_spec(&BackendSpec {
            endpoint: endpoint.clone(),
            model_tag: b.model_tag.clone(),
            timeout_ms: b.timeout_ms,
            max_retries: b.max_retries,
            backoff_ms: b.backoff_ms,
        })?)),
        (None, None) => Err(PipelineError::Invalid(vec![format!("backend {} has no endpoint or mock", b.model_tag)])),
    }
}

#[derive(Debug, Clone)]
pub struct GenerateOutcome {
    pub prompts: usize,
    pub manifests: Vec<RunManifest>,
}

/// Runs every prompt against every configured backend. Prompt failures
/// are recorded per prompt; the command fails only when every prompt
/// failed on every backend.
pub fn cmd_generate(cfg: &LoadedConfig) -> Result<GenerateOutcome, PipelineError> {
    let g = &cfg.config.generation;
    if g.backends.is_empty() {
        return Err(PipelineError::Invalid(vec!["generation.backends is empty".into()]));
    }
    let prompts = build_prompts(cfg)?;
    if prompts.is_empty() {
        return Err(GenError::NoPrompts.into());
    }
    let backends = g
        .backends
        .iter()
        .map(|b| generation_backend(cfg, b))
        .collect::<Result<Vec<_>, _>>()?;
    let dict = dictionary(cfg)?;
    let settings = CollectSettings {
        n_target: g.n_target,
        max_attempts: g.max_attempts,
        params: g.decoding,
        rules: g.validity,
    };
    let mut manifests = Vec::new();
    for backend in &backends {
        let store = EntailmentStore::create(&cfg.gen_dir(), backend.model_tag())?;
        manifests.push(run_experiment(
            backend.as_ref(),
            &prompts,
            &settings,
            &dict,
            cfg.config.parallelism,
            &cfg.catalog.hash(),
            &store,
        )?);
    }
    if manifests.iter().all(RunManifest::all_failed) {
        return Err(PipelineError::AllPromptsFailed);
    }
    Ok(GenerateOutcome {
        prompts: prompts.len(),
        manifests,
    })
}

fn prefix_of_template(template_id: &str) -> Option<PrefixPrompt> {
    PREFIX_PROMPTS.iter().find(|p| p.template_id() == template_id).copied()
}

fn sentiment_backend(cfg: &LoadedConfig) -> Result<Box<dyn SentimentBackend>, PipelineError> {
    let s = &cfg.config.sentiment;
    if let Some(endpoint) = &s.endpoint {
        return Ok(Box::new(RemoteClassifier::new(endpoint, Duration::from_secs(30))?));
    }
    let lexicon = match &s.lexicon {
        Some(p) => SentimentLexicon::from_file(&require(cfg.resolve(p))?)?,
        None => SentimentLexicon::bundled(),
    };
    Ok(Box::new(LexiconSentiment {
        lexicon,
        tie: s.tie,
    }))
}

fn adjective_tagger(cfg: &LoadedConfig) -> Result<LexiconTagger, PipelineError> {
    Ok(match &cfg.config.adjectives.lexicon {
        Some(p) => LexiconTagger::new(AdjectiveLexicon::from_file(&require(cfg.resolve(p))?)?),
        None => LexiconTagger::default(),
    })
}

fn embedding_backend(cfg: &LoadedConfig) -> Result<Option<Box<dyn EmbeddingBackend>>, PipelineError> {
    let e = &cfg.config.embedding;
    Ok(match e.backend {
        EmbeddingKind::None => None,
        EmbeddingKind::Hash => Some(Box::new(HashEmbedder::new(e.dim, e.seed))),
        EmbeddingKind::Http => {
            let endpoint = e.endpoint.as_deref().unwrap_or_default();
            Some(Box::new(HttpEmbedder::new(endpoint, &e.tag, Duration::from_millis(e.timeout_ms))?))
        }
    })
}

fn vectors(backend: &dyn EmbeddingBackend, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    Ok(embedkit::embed(backend, texts)?.into_iter().map(|v| v.values).collect())
}

/// Adapted against reference centroid distance per prefix.
fn distances(
    eval: &Evaluation,
    backend: &dyn EmbeddingBackend,
    metric: embedkit::Metric,
    sentence: &BTreeMap<String, Vec<f64>>,
) -> Result<Vec<PrefixDistances>, EmbedError> {
    let tokens: BTreeSet<&str> = eval.items.iter().flat_map(|i| i.adjectives.iter().map(String::as_str)).collect();
    let tokens: Vec<&str> = tokens.into_iter().collect();
    let word: BTreeMap<&str, Vec<f64>> = tokens.iter().copied().zip(vectors(backend, &tokens)?).collect();
    let mut out = Vec::new();
    for prefix in &eval.prefixes {
        let side = |role: Role| eval.items.iter().filter(move |i| i.role == role && &i.prefix == prefix);
        let sent = |role: Role| side(role).map(|i| sentence[&i.id].as_slice()).collect::<Vec<_>>();
        let adj = |role: Role| {
            side(role)
                .flat_map(|i| i.adjectives.iter().map(|t| word[t.as_str()].as_slice()))
                .collect::<Vec<_>>()
        };
        out.push(PrefixDistances {
            prefix: prefix.clone(),
            adjective: centroid_distance(&adj(Role::Adapted), &adj(Role::Reference), metric).ok(),
            sentence: centroid_distance(&sent(Role::Adapted), &sent(Role::Reference), metric).ok(),
        });
    }
    Ok(out)
}

/// Clusters adapted outputs with the k of best silhouette and stores the
/// assignment on each item.
fn cluster(cfg: &LoadedConfig, eval: &mut Evaluation, sentence: &BTreeMap<String, Vec<f64>>) -> Result<(), ClusterError> {
    let c = &cfg.config.clustering;
    let idx: Vec<usize> = (0..eval.items.len()).filter(|&i| eval.items[i].role == Role::Adapted).collect();
    let mut points: Vec<Vec<f64>> = idx.iter().map(|&i| sentence[&eval.items[i].id].clone()).collect();
    if points.len() <= c.k_min {
        return Err(ClusterError::TooFewPoints {
            n: points.len(),
            k: c.k_min,
        });
    }
    if c.normalize {
        points = l2_normalize(&points);
    }
    let k_max = c.k_max.min(points.len() - 1);
    let selection = select_k(&points, c.k_min..=k_max, c.restarts, c.seed)?;
    let report = kmeans_with(
        &points,
        &KMeansConfig {
            k: selection.chosen_k,
            seed: c.seed,
            restarts: c.restarts,
            ..Default::default()
        },
    )?;
    for (&i, &a) in idx.iter().zip(&report.assignments) {
        eval.items[i].cluster = Some(a);
    }
    eval.clustering = Some(ClusterSummary {
        k: report.k,
        seed: c.seed,
        restarts: c.restarts,
        distortion: report.distortion,
        silhouette: report.silhouette,
        calinski_harabasz: report.calinski_harabasz,
    });
    eval.k_selection = Some(selection);
    Ok(())
}

fn skip_reason(e: &ClusterError) -> String {
    match e {
        ClusterError::TooFewPoints { .. } => format!("TooFewPoints: {e}"),
        other => other.to_string(),
    }
}

/// Computes every metric over the valid entity entailments and writes
/// `evaluation.json`. A missing or failing embedding backend disables
/// only the distance and cluster results, with the reason recorded.
pub fn cmd_evaluate(cfg: &LoadedConfig) -> Result<Evaluation, PipelineError> {
    let g = &cfg.config.generation;
    let mut manifests = Vec::new();
    let mut entailments = Vec::new();
    for b in &g.backends {
        let store = EntailmentStore::open(&cfg.gen_dir(), &b.model_tag)?;
        let manifest = read_manifest(&require(store.manifest_path())?)?;
        entailments.extend(read_entailments(&require(store.entailments_path())?)?.into_iter().map(|e| (b.role, e)));
        manifests.push(manifest);
    }
    let sentiment = sentiment_backend(cfg)?;
    let tagger = adjective_tagger(cfg)?;
    let embedder = embedding_backend(cfg)?;
    let prefixes: Vec<String> = cfg.config.prefixes()?.iter().map(|p| p.text.to_string()).collect();

    let mut fail_counts: Vec<FailCount> = Vec::new();
    for m in &manifests {
        for p in &m.prompts {
            let Some(prefix) = prefix_of_template(&p.template_id) else { continue };
            match fail_counts.iter_mut().find(|f| f.model_tag == m.model_tag && f.prefix == prefix.text) {
                Some(f) => {
                    f.fail_count += p.fail_count as u64;
                    f.attempts += p.attempts as u64;
                }
                None => fail_counts.push(FailCount {
                    model_tag: m.model_tag.clone(),
                    prefix: prefix.text.to_string(),
                    fail_count: p.fail_count as u64,
                    attempts: p.attempts as u64,
                }),
            }
        }
    }
    fail_counts.sort_by_key(|f| {
        let tag = g.backends.iter().position(|b| b.model_tag == f.model_tag);
        (tag, PrefixPrompt::by_text(&f.prefix).map(|p| p.order()))
    });

    let kept: Vec<(Role, crate::genclient::Entailment, PrefixPrompt)> = entailments
        .into_iter()
        .filter(|(_, e)| e.valid)
        .filter_map(|(r, e)| prefix_of_template(&e.template_id).map(|p| (r, e, p)))
        .collect();
    let texts: Vec<&str> = kept.iter().map(|(_, e, _)| e.text.as_str()).collect();
    let labels = if texts.is_empty() { Vec::new() } else { sentiment.classify(&texts)? };
    let mut items = Vec::with_capacity(kept.len());
    for ((role, e, prefix), label) in kept.iter().zip(labels) {
        let entity = e.prompt_ref.split_once('|').map_or("", |(_, s)| s).to_string();
        items.push(EvalItem {
            id: e.id.clone(),
            model_tag: e.model_tag.clone(),
            role: *role,
            entity,
            prefix: prefix.text.to_string(),
            text: e.text.clone(),
            polarity: label.value,
            adjectives: tagger.adjectives(&e.text)?.iter().map(|(t, _)| t.to_string()).collect(),
            cluster: None,
        });
    }

    let mut eval = Evaluation {
        run_id: cfg.config.run_id.clone(),
        provenance: Provenance {
            sentiment: sentiment.tag().to_string(),
            adjectives: tagger.tag().to_string(),
            embedding: embedder.as_ref().map(|e| e.tag().to_string()),
            metric: cfg.config.embedding.metric.as_str().to_string(),
            generation: g.backends.iter().map(|b| (b.model_tag.clone(), b.role)).collect(),
        },
        prefixes,
        fail_counts,
        items,
        ..Default::default()
    };

    match embedder {
        None => {
            eval.skipped.insert("embedding".into(), "no embedding backend configured".into());
            eval.skipped.insert("clustering".into(), "no embedding backend configured".into());
        }
        Some(base) => {
            let cached;
            let backend: &dyn EmbeddingBackend = if cfg.config.embedding.cache {
                cached = CachedEmbedder::open(base.as_ref(), &cfg.cache_dir())?;
                &cached
            } else {
                base.as_ref()
            };
            let texts: Vec<&str> = eval.items.iter().map(|i| i.text.as_str()).collect();
            match vectors(backend, &texts) {
                Err(e) => {
                    eval.skipped.insert("embedding".into(), e.to_string());
                    eval.skipped.insert("clustering".into(), format!("embedding failed: {e}"));
                }
                Ok(vs) => {
                    let sentence: BTreeMap<String, Vec<f64>> =
                        eval.items.iter().map(|i| i.id.clone()).zip(vs).collect();
                    if eval.items.iter().any(|i| i.role == Role::Reference) {
                        match distances(&eval, backend, cfg.config.embedding.metric, &sentence) {
                            Ok(d) => eval.distances = d,
                            Err(e) => {
                                eval.skipped.insert("distances".into(), e.to_string());
                            }
                        }
                    } else {
                        eval.skipped.insert("distances".into(), "no reference outputs".into());
                    }
                    if let Err(e) = cluster(cfg, &mut eval, &sentence) {
                        eval.skipped.insert("clustering".into(), skip_reason(&e));
                    }
                }
            }
        }
    }

    let path = cfg.evaluation_path();
    create_parent(&path)?;
    let text = serde_json::to_string_pretty(&eval).expect("evaluation serializes");
    std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(eval)
}

pub fn read_evaluation(path: &Path) -> Result<Evaluation, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|_| PipelineError::MissingPath(path.to_path_buf()))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

fn tasks(eval: &Evaluation) -> Vec<Task> {
    eval.items
        .iter()
        .map(|i| Task {
            entailment_id: i.id.clone(),
            entity: i.entity.clone(),
            prefix: i.prefix.clone(),
            prompt: format!("{} {}", i.entity, i.prefix),
            text: i.text.clone(),
            model_tag: i.model_tag.clone(),
        })
        .collect()
}

/// The annotation store of a run: tasks from `evaluation.json` when it
/// exists, any entailment id otherwise. Earlier labels are replayed from
/// the log without reopening it for writing.
pub fn load_annotations(cfg: &LoadedConfig) -> Result<AnnotationStore, PipelineError> {
    let mut store = match read_evaluation(&cfg.evaluation_path()) {
        Ok(eval) => AnnotationStore::new(tasks(&eval)),
        Err(PipelineError::MissingPath(_)) => AnnotationStore::permissive(),
        Err(e) => return Err(e),
    };
    store.min_annotators = cfg.config.annotation.min_annotators;
    let log = cfg.annotation_log();
    if log.exists() {
        for record in annotation::read_log(&log)? {
            store.submit(record)?;
        }
    }
    Ok(store)
}

/// Starts the annotation service on `bind`, appending labels to the run's
/// annotation log. Dropping the handle stops the server.
pub fn cmd_serve(cfg: &LoadedConfig, bind: Option<SocketAddr>) -> Result<(ServerHandle, Arc<ServiceState>), PipelineError> {
    let eval = read_evaluation(&cfg.evaluation_path())?;
    let addr = match bind {
        Some(a) => a,
        None => cfg.config.annotation.bind.parse().map_err(|e| {
            PipelineError::Invalid(vec![format!("annotation.bind {:?}: {e}", cfg.config.annotation.bind)])
        })?,
    };
    let ui_dir = match &cfg.config.annotation.ui_dir {
        Some(p) => Some(require(cfg.resolve(p))?),
        None => None,
    };
    let mut store = AnnotationStore::new(tasks(&eval));
    store.min_annotators = cfg.config.annotation.min_annotators;
    let store = store.with_log(&cfg.annotation_log())?;
    let state = Arc::new(ServiceState {
        store,
        run_id: cfg.config.run_id.clone(),
    });
    let router = annotation::router(state.clone(), ui_dir.as_deref());
    let handle = ServerHandle::spawn(router, addr).map_err(|source| PipelineError::Io {
        path: PathBuf::from(addr.to_string()),
        source,
    })?;
    Ok((handle, state))
}

#[derive(Debug, Clone)]
pub struct ImportOutcome {
    pub imported: usize,
    pub summary: RelevanceSummary,
    pub annotators: Vec<String>,
}

/// Imports labels from a CSV file into the run's annotation log.
pub fn cmd_import_annotations(cfg: &LoadedConfig, csv: &Path) -> Result<ImportOutcome, PipelineError> {
    let csv = require(csv.to_path_buf())?;
    let records = annotation::read_csv(&csv)?;
    let store = load_annotations(cfg)?;
    for r in &records {
        if let Err(e) = r.validate() {
            return Err(e.into());
        }
        if !store.tasks().is_empty() && store.task(&r.entailment_id).is_none() {
            return Err(AnnotationError::UnknownEntailment(r.entailment_id.clone()).into());
        }
    }
    let log = cfg.annotation_log();
    create_parent(&log)?;
    let store = store.with_log(&log)?;
    for r in records.iter().cloned() {
        store.submit(r)?;
    }
    Ok(ImportOutcome {
        imported: records.len(),
        summary: store.relevance_summary(),
        annotators: store.annotators(),
    })
}

#[derive(Debug, Clone)]
pub struct ReportOutcome {
    pub bundle: ReportBundle,
    pub files: Vec<PathBuf>,
}

/// Builds and writes every available table. With nothing to tabulate only
/// the manifest is written and the command fails.
pub fn cmd_report(cfg: &LoadedConfig) -> Result<ReportOutcome, PipelineError> {
    let eval_path = cfg.evaluation_path();
    let eval = match read_evaluation(&eval_path) {
        Ok(e) => e,
        Err(PipelineError::MissingPath(_)) => Evaluation {
            run_id: cfg.config.run_id.clone(),
            ..Default::default()
        },
        Err(e) => return Err(e),
    };
    let store = load_annotations(cfg)?;
    let r = &cfg.config.report;
    let mut bundle = build_bundle(
        &eval,
        Some(&store),
        BuildOptions {
            entity_decimals: r.entity_decimals,
        },
    );
    bundle.manifest.insert("config_hash".into(), cfg.config.hash());
    bundle.manifest.insert("catalog_hash".into(), cfg.catalog.hash());
    if eval_path.exists() {
        bundle.manifest.insert("evaluation_sha256".into(), sha256_file(&eval_path)?);
    }
    bundle.manifest.insert("annotation_records".into(), store.len().to_string());
    let files = emit(
        &bundle,
        &cfg.reports_root(),
        EmitOptions {
            csv: r.csv,
            markdown: r.markdown,
            extra_precision: r.extra_precision,
        },
    )?;
    if bundle.tables.is_empty() {
        return Err(PipelineError::NothingToReport(cfg.config.run_id.clone()));
    }
    Ok(ReportOutcome { bundle, files })
}
