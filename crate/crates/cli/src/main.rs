//! `lexitrend`: run pipeline stages over a work directory.
//!
//! Exit codes: 0 success, 2 usage error, 1 runtime error.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lexitrend_core::config::PipelineConfig;
use lexitrend_core::ingest::write_ndjson;
use lexitrend_core::pipeline::{Stage, Workdir};
use lexitrend_core::synth::{generate, shift_scenario, SynthConfig};
use lexitrend_server::{serve_blocking, ServeOptions};

/// Config file picked up from the work directory when --config is not given.
const DEFAULT_CONFIG: &str = "lexitrend.toml";

#[derive(Debug, Parser)]
#[command(name = "lexitrend", version, about = "Temporal n-gram analytics over short-text corpora")]
struct Cli {
    /// Work directory; every stage reads and writes below it.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,
    /// Pipeline config (TOML). Defaults to <workdir>/lexitrend.toml when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the run seed (embeddings, score sampling, synth).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean, filter and bucket the input corpus.
    Ingest,
    /// Detect phrases and build the n-gram vocabulary.
    Vocab(VocabArgs),
    /// Per-bucket absolute and per-million frequencies.
    Freq,
    /// Train embeddings and compute distance series (all steps by default).
    Embed {
        #[command(subcommand)]
        step: Option<EmbedStep>,
    },
    /// Sentiment and topic series.
    Scores,
    /// Build the series store from the freq, embed and scores outputs.
    Store,
    /// Serve the store over HTTP.
    Serve(ServeArgs),
    /// Write the public CSV bundle from the store.
    Export {
        /// Output directory [default: <workdir>/export].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus and its ground-truth ledger.
    Synth(SynthArgs),
    /// Corpus volume by month, day of month, hour and minute.
    Report {
        /// Output directory [default: <workdir>/report].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every stage from ingest through store.
    Run,
    /// Print the effective config and its fingerprint.
    Config,
}

#[derive(Debug, Args)]
struct VocabArgs {
    #[command(subcommand)]
    action: Option<VocabAction>,
    #[command(flatten)]
    opts: VocabOpts,
}

#[derive(Debug, Subcommand)]
enum VocabAction {
    /// Same as plain `vocab`.
    Build(VocabOpts),
}

/// Overrides of the `[phrases]` config section. They change the config
/// fingerprint, so downstream stages must see the same values; put them in
/// the config file for multi-stage runs.
#[derive(Debug, Args, Default, Clone)]
struct VocabOpts {
    /// Minimum corpus count for a vocabulary entry (also the score discount).
    #[arg(long)]
    min_count: Option<u64>,
    /// Phrase score threshold; pairs scoring at least this are joined.
    #[arg(long)]
    threshold: Option<f64>,
    /// Connector word list, one word per line; `#` starts a comment.
    #[arg(long)]
    connectors: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum EmbedStep {
    /// Train the compass on the balanced sample.
    Compass,
    /// Train one slice per bucket with the compass context frozen.
    Slices,
    /// Distance-to-anchor series for every vocabulary key.
    Distances,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Listen address.
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Allowed CORS origin; "*" or unset allows any.
    #[arg(long)]
    cors_origin: Option<String>,
    /// Directory of static UI assets served at `/`.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scenario {
    /// Background text with a few planted multiword phrases.
    Default,
    /// A target word moving between contexts plus a stationary control.
    Shift,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "default")]
    scenario: Scenario,
    /// Synth config (TOML); replaces the scenario preset.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Corpus output [default: the config's input path under the workdir].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ledger output [default: <workdir>/ledger.json].
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Shift scenario: number of monthly buckets.
    #[arg(long, default_value_t = 20)]
    buckets: usize,
    /// Shift scenario: bucket index where the shift starts.
    #[arg(long, default_value_t = 10)]
    onset: usize,
    /// Shift scenario: target documents per bucket.
    #[arg(long, default_value_t = 200)]
    target_docs: usize,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let path = match &cli.config {
        Some(p) => Some(p.clone()),
        None => Some(cli.workdir.join(DEFAULT_CONFIG)).filter(|p| p.exists()),
    };
    let cfg = match path {
        Some(p) => PipelineConfig::load(&p)?,
        None => PipelineConfig::default(),
    };
    Ok(match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

fn apply_vocab_opts(cfg: &mut PipelineConfig, opts: &VocabOpts) -> Result<()> {
    if let Some(m) = opts.min_count {
        cfg.phrases.min_count = m;
    }
    if let Some(t) = opts.threshold {
        cfg.phrases.threshold = t;
    }
    if let Some(p) = &opts.connectors {
        cfg.phrases.connectors = read_word_list(p)?.into_iter().collect();
    }
    cfg.validate()?;
    Ok(())
}

fn synth(cli: &Cli, cfg: &PipelineConfig, args: &SynthArgs) -> Result<()> {
    let mut spec = match (&args.spec, args.scenario) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<SynthConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        (None, Scenario::Default) => SynthConfig::default(),
        (None, Scenario::Shift) => shift_scenario(args.buckets, args.onset, args.target_docs, cfg.seed),
    };
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    let out = generate(&spec)?;
    let corpus = args.out.clone().unwrap_or_else(|| cli.workdir.join(&cfg.input));
    let ledger = args.ledger.clone().unwrap_or_else(|| cli.workdir.join("ledger.json"));
    for p in [&corpus, &ledger] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    write_ndjson(&corpus, &out.documents)?;
    out.ledger.write(&ledger)?;
    println!(
        "synth: {} documents in {} buckets -> {} (ledger {})",
        out.documents.len(),
        spec.buckets,
        corpus.display(),
        ledger.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    if let Command::Vocab(v) = &cli.command {
        let opts = match &v.action {
            Some(VocabAction::Build(o)) => o,
            None => &v.opts,
        };
        apply_vocab_opts(&mut cfg, opts)?;
    }
    if let Command::Synth(args) = &cli.command {
        return synth(&cli, &cfg, args);
    }
    if !cli.workdir.is_dir() {
        anyhow::bail!("work directory {} does not exist", cli.workdir.display());
    }
    let wd = Workdir::new(&cli.workdir, cfg);
    match &cli.command {
        Command::Ingest => {
            let m = wd.ingest()?;
            let docs: u64 = m.buckets.values().map(|b| b.documents).sum();
            let view: u64 = m.embedding_view.values().map(|b| b.documents).sum();
            println!(
                "ingest: read {}, kept {docs} in {} buckets ({view} in the embedding view), filtered {}, out of range {}",
                m.read,
                m.buckets.len(),
                m.rejected_filtered,
                m.rejected_out_of_range
            );
        }
        Command::Vocab(_) => {
            let v = wd.vocab()?;
            let [u, b, t] = v.arity_counts();
            println!("vocab: {} keys ({u} unigrams, {b} bigrams, {t} trigrams)", v.len());
        }
        Command::Freq => {
            let t = wd.freq()?;
            println!("freq: {} buckets", t.counts.len());
        }
        Command::Embed { step } => match step {
            Some(EmbedStep::Compass) => {
                let c = wd.embed_compass()?;
                println!("embed compass: {} words, dimension {}", c.target.len(), c.target.dim);
            }
            Some(EmbedStep::Slices) => {
                let b = wd.embed_slices()?;
                println!("embed slices: {} buckets", b.len());
            }
            Some(EmbedStep::Distances) => {
                let d = wd.embed_distances()?;
                println!("embed distances: {} keys", d.len());
            }
            None => {
                let d = wd.embed()?;
                println!("embed: distance series for {} keys", d.len());
            }
        },
        Command::Scores => {
            let s = wd.scores()?;
            println!("scores: {} sentiment series, {} topic series", s.sentiment.len(), s.topics.len());
        }
        Command::Store => {
            let m = wd.store()?;
            println!("store: {} keys, {} buckets, fingerprint {}", m.vocabulary_size, m.buckets.len(), m.config_fingerprint);
        }
        Command::Run => {
            let m = wd.run_all()?;
            println!("run: {} keys, {} buckets, fingerprint {}", m.vocabulary_size, m.buckets.len(), m.config_fingerprint);
        }
        Command::Serve(args) => {
            wd.require(Stage::Store)?;
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .with_writer(std::io::stderr)
                .init();
            serve_blocking(ServeOptions {
                store: wd.path("store"),
                bind: args.bind,
                cors_origin: args.cors_origin.clone(),
                static_dir: args.static_dir.clone(),
            })?;
        }
        Command::Export { out } => {
            let dir = wd.export(out.as_deref())?;
            println!("export: {}", dir.display());
        }
        Command::Report { out } => {
            let dir = wd.report(out.as_deref())?;
            println!("report: {}", dir.display());
        }
        Command::Config => {
            let text = format!("{}# fingerprint {}\n", wd.cfg.to_toml()?, wd.fingerprint);
            // a closed pipe (`lexitrend config | head`) is not an error
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
        Command::Synth(_) => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors and 0 for --help/--version
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
