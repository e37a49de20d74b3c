use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lexsim::config::{ConfigError, RunConfig};
use lexsim::fixture;
use lexsim::pipeline::{Pipeline, PipelineError, Stage, StageOutcome};

/// Builds feature-matched noun-pair similarity datasets from a wordnet-style
/// knowledge base and a text corpus.
#[derive(Parser)]
#[command(name = "lexsim", version)]
struct Cli {
    /// Run configuration (TOML). Flags override its keys.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for every artifact.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Threads per stage (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Re-run stages even when the manifest shows them current.
    #[arg(long, global = true)]
    force: bool,
    /// More diagnostics (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the KB TSV files and store canonical copies.
    ImportKb {
        /// Directory holding synsets.tsv, relations.tsv, lexicon.tsv.
        #[arg(long)]
        kb_dir: Option<PathBuf>,
    },
    /// Generate the KB pseudo-corpus by random walks.
    Walk(WalkArgs),
    /// Tokenize the text corpus and count tokens.
    Count {
        /// Raw text files, read in order.
        #[arg(long, num_args = 1..)]
        corpus: Vec<PathBuf>,
        /// Keep the original case.
        #[arg(long)]
        no_lowercase: bool,
    },
    /// Train text and/or KB embeddings.
    Train {
        #[arg(long, value_enum, default_value_t = Space::Both)]
        space: Space,
    },
    /// Fit the orthogonal map and build the hybrid space.
    Align {
        #[arg(long)]
        text_weight: Option<f64>,
        #[arg(long)]
        kb_weight: Option<f64>,
    },
    /// Compute the four raw feature dictionaries.
    Features {
        #[arg(long)]
        min_len: Option<usize>,
        /// PND lexicon: single-word nouns or all single-word lemmas.
        #[arg(long, value_parser = ["nouns", "all"])]
        pnd_scope: Option<String>,
        /// Hypernym path used for concreteness.
        #[arg(long, value_parser = ["shortest", "longest"])]
        depth_rule: Option<String>,
    },
    /// Outlier filtering, normalization and two-group clustering.
    Cluster {
        #[arg(long)]
        iqr_k: Option<f64>,
    },
    /// Write the feature-matched noun-pair dataset.
    Pairs {
        #[arg(long)]
        max_pairs_per_signature: Option<u64>,
    },
    /// Similarity distribution report of the dataset.
    Report,
    /// Spearman evaluation of the three spaces on gold files.
    Eval {
        #[arg(long, num_args = 1..)]
        gold: Vec<PathBuf>,
    },
    /// Every stage in dependency order, skipping current ones.
    RunAll,
    /// Write the toy fixture (KB, corpus, gold file, run.toml) to a directory.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = fixture::DEFAULT_SEED)]
        fixture_seed: u64,
    },
}

#[derive(Args)]
struct WalkArgs {
    #[arg(long)]
    alpha: Option<f64>,
    /// Total walks to launch.
    #[arg(long, conflicts_with = "walks_per_lexicalization")]
    n_walks: Option<u64>,
    #[arg(long)]
    walks_per_lexicalization: Option<f64>,
    #[arg(long)]
    min_tokens_per_walk: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Space {
    Text,
    Kb,
    Both,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.output {
        cfg.paths.output = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    match &cli.command {
        Command::ImportKb { kb_dir: Some(d) } => cfg.paths.kb_dir = d.clone(),
        Command::Walk(w) => {
            if let Some(a) = w.alpha {
                cfg.walk.alpha = a;
            }
            if let Some(n) = w.n_walks {
                cfg.walk.n_walks = Some(n);
            }
            if let Some(r) = w.walks_per_lexicalization {
                cfg.walk.n_walks = None;
                cfg.walk.walks_per_lexicalization = r;
            }
            if let Some(m) = w.min_tokens_per_walk {
                cfg.walk.min_tokens_per_walk = m;
            }
        }
        Command::Count { corpus, no_lowercase } => {
            if !corpus.is_empty() {
                cfg.paths.corpus = corpus.clone();
            }
            if *no_lowercase {
                cfg.corpus.lowercase = false;
            }
        }
        Command::Align { text_weight, kb_weight } => {
            if let Some(w) = text_weight {
                cfg.align.text_weight = *w;
            }
            if let Some(w) = kb_weight {
                cfg.align.kb_weight = *w;
            }
        }
        Command::Features { min_len, pnd_scope, depth_rule } => {
            if let Some(m) = min_len {
                cfg.features.min_len = *m;
            }
            if let Some(s) = pnd_scope {
                cfg.features.pnd_scope = s.clone();
            }
            if let Some(d) = depth_rule {
                cfg.features.depth_rule = d.clone();
            }
        }
        Command::Cluster { iqr_k: Some(k) } => cfg.features.iqr_k = *k,
        Command::Pairs { max_pairs_per_signature: Some(m) } => cfg.pairs.max_pairs_per_signature = Some(*m),
        Command::Eval { gold } if !gold.is_empty() => cfg.paths.gold = gold.clone(),
        _ => {}
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Fixture { out, fixture_seed } = &cli.command {
        let s = fixture::write_fixture(out, *fixture_seed).with_context(|| format!("writing {}", out.display()))?;
        eprintln!(
            "fixture: {} synsets, {} relations, {} lexicon entries, {} corpus tokens",
            s.synsets,
            s.relations,
            s.lexicon_entries,
            fixture::CORPUS_TOKENS
        );
        return Ok(());
    }
    let cfg = load_config(&cli)?;
    let mut pipeline = Pipeline::new(cfg)?.force(cli.force);
    let stages: Vec<Stage> = match cli.command {
        Command::ImportKb { .. } => vec![Stage::ImportKb],
        Command::Walk(_) => vec![Stage::Walk],
        Command::Count { .. } => vec![Stage::Count],
        Command::Train { space: Space::Text } => vec![Stage::TrainText],
        Command::Train { space: Space::Kb } => vec![Stage::TrainKb],
        Command::Train { space: Space::Both } => vec![Stage::TrainText, Stage::TrainKb],
        Command::Align { .. } => vec![Stage::Align],
        Command::Features { .. } => vec![Stage::Features],
        Command::Cluster { .. } => vec![Stage::Cluster],
        Command::Pairs { .. } => vec![Stage::Pairs],
        Command::Report => vec![Stage::Report],
        Command::Eval { .. } => vec![Stage::Eval],
        Command::RunAll => Stage::ALL.to_vec(),
        Command::Fixture { .. } => unreachable!("handled above"),
    };
    for stage in stages {
        let outcome = pipeline.run(stage)?;
        eprintln!(
            "{stage}: {}",
            match outcome {
                StageOutcome::Ran => "ran",
                StageOutcome::Skipped => "skipped (up to date)",
            }
        );
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<PipelineError>() {
            return e.exit_code() as u8;
        }
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 1;
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
