//! Entity and tweet characterization with generative language models.
//!
//! The crate renders designed prompts (entity prefix-prompts and four tweet
//! question families), drives a text-generation backend until enough valid
//! continuations exist, and evaluates the continuations with a fixed metric
//! suite: failure counts, lexicon sentiment, adjective presence, embedding
//! centroid distances, k-means cluster analysis and human-annotation
//! agreement. Results are emitted as deterministic CSV and Markdown tables.
//!
//! Each stage lives in its own module and can be used on its own:
//!
//! * [`corpus`]: tweet cleaning, English-ratio filtering and article ingestion.
//! * [`promptkit`]: prompt catalog, rendering and slot parsing.
//! * [`genclient`]: generation backends, validity filter and the
//!   generate-until-valid loop.
//! * [`nlpmetrics`]: sentiment and adjective extraction plus their tables.
//! * [`embedkit`]: embedding backends, vector cache and centroid distances.
//! * [`clusterlab`]: k-means, cluster validity indices and k selection.
//! * [`annotation`]: label store, Cohen's kappa and the annotation service.
//! * [`report`]: table bundle and CSV/Markdown emission.
//! * [`pipeline`]: run configuration and the end-to-end commands.
//!
//! The `examples/` directory has one runnable program per capability.

pub mod annotation;
pub mod clusterlab;
pub mod corpus;
pub mod embedkit;
pub mod genclient;
pub mod nlpmetrics;
pub mod pipeline;
pub mod promptkit;
pub mod ratio;
pub mod report;
pub mod server;
pub mod text;

pub use ratio::Ratio;
