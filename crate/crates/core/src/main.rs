use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use charprobe::corpus::{entity_candidates, read_tweets};
use charprobe::pipeline::{self, LoadedConfig, PipelineError, RunConfig};

#[derive(Parser)]
#[command(name = "charprobe", version, about = "Characterize entities and tweets with generative language models")]
struct Cli {
    /// Run config (TOML).
    #[arg(short, long, env = "CHARPROBE_CONFIG", default_value = "charprobe.toml", global = true)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Flags that replace the matching config fields.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long, global = true)]
    run_id: Option<String>,
    #[arg(long, global = true)]
    output_root: Option<PathBuf>,
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// English-word share a tweet must exceed to be kept.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Valid entailments to collect per prompt.
    #[arg(long, global = true)]
    n_target: Option<usize>,
    #[arg(long, global = true)]
    max_attempts: Option<usize>,
    /// Base decoding seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    cluster_seed: Option<u64>,
    /// Adds unrounded `_full` columns to the CSV tables.
    #[arg(long, global = true)]
    extra_precision: bool,
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(v) = &self.run_id {
            c.run_id = v.clone();
        }
        if let Some(v) = &self.output_root {
            c.output_root = v.clone();
        }
        if let Some(v) = self.parallelism {
            c.parallelism = v;
        }
        if let Some(v) = self.threshold {
            c.corpus.threshold = v;
        }
        if let Some(v) = self.n_target {
            c.generation.n_target = v;
        }
        if let Some(v) = self.max_attempts {
            c.generation.max_attempts = v;
        }
        if let Some(v) = self.seed {
            c.generation.decoding.seed = Some(v);
        }
        if let Some(v) = self.cluster_seed {
            c.clustering.seed = v;
        }
        if self.extra_precision {
            c.report.extra_precision = true;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Clean and filter the tweet corpus.
    Clean,
    /// Generate entailments for every prompt and backend.
    Generate,
    /// Compute sentiment, adjective, distance and cluster metrics.
    Evaluate,
    /// Serve the annotation API and UI until interrupted.
    Serve {
        #[arg(long)]
        bind: Option<SocketAddr>,
    },
    /// Import annotation labels from CSV.
    ImportAnnotations { csv: PathBuf },
    /// Write the report tables.
    Report,
    /// Print the config with defaults filled in, and its hash.
    Config,
    /// List frequent capitalized tokens of the tweet files as entity candidates.
    Candidates {
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let cfg = LoadedConfig::load_with(&cli.config, |c| cli.overrides.apply(c))?;
    match cli.command {
        Command::Clean => {
            let o = pipeline::cmd_clean(&cfg)?;
            println!(
                "kept {} of {} tweets ({} empty, {} below threshold, {} unreadable records) -> {}",
                o.kept,
                o.input,
                o.tally.empty,
                o.tally.ratio,
                o.skipped.len(),
                o.path.display()
            );
        }
        Command::Generate => {
            let o = pipeline::cmd_generate(&cfg)?;
            for m in &o.manifests {
                println!("{}: {} prompts", m.model_tag, m.prompts.len());
                for (template, fails) in m.fail_counts() {
                    println!("  {template}\tfail_count={fails}");
                }
                for p in m.failed() {
                    println!("  failed {}: {}", p.prompt_ref, p.error.as_deref().unwrap_or(""));
                }
            }
        }
        Command::Evaluate => {
            let e = pipeline::cmd_evaluate(&cfg)?;
            println!("evaluated {} entailments -> {}", e.items.len(), cfg.evaluation_path().display());
            for (step, why) in &e.skipped {
                println!("  skipped {step}: {why}");
            }
        }
        Command::Serve { bind } => {
            let (handle, _) = pipeline::cmd_serve(&cfg, bind)?;
            println!("serving run {} on {}", cfg.config.run_id, handle.url());
            let rt = tokio::runtime::Builder::new_current_thread()
                .enable_all()
                .build()
                .map_err(|source| PipelineError::Io { path: "runtime".into(), source })?;
            let _ = rt.block_on(tokio::signal::ctrl_c());
            handle
                .shutdown()
                .map_err(|source| PipelineError::Io { path: "server".into(), source })?;
        }
        Command::ImportAnnotations { csv } => {
            let o = pipeline::cmd_import_annotations(&cfg, &csv)?;
            let s = o.summary;
            println!(
                "imported {} labels from {} annotators: {} non-relevant, {} only relevant, {} relevant and characterizing, {} disagreements",
                o.imported,
                o.annotators.len(),
                s.non_relevant,
                s.only_relevant,
                s.relevant_and_characterizing,
                s.disagreements
            );
        }
        Command::Report => {
            let o = pipeline::cmd_report(&cfg)?;
            for f in &o.files {
                println!("{}", f.display());
            }
            for (table, why) in &o.bundle.skipped {
                eprintln!("skipped {table}: {why}");
            }
        }
        Command::Config => {
            print!("{}", cfg.config.canonical());
            println!("# hash {}", cfg.config.hash());
        }
        Command::Candidates { top } => {
            let mut texts = Vec::new();
            for p in &cfg.config.corpus.tweets {
                let path = cfg.resolve(p);
                if !path.exists() {
                    return Err(PipelineError::MissingPath(path));
                }
                texts.extend(read_tweets(&path)?.tweets.into_iter().map(|t| t.text));
            }
            for (token, n) in entity_candidates(texts.iter().map(String::as_str), top) {
                println!("{n}\t{token}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                PipelineError::Config(_) | PipelineError::Invalid(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
