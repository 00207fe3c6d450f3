// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{GenerateConfig, PipelineConfig, CONFIG_HELP};
use error::CliError;
use output::Run;

/// Learn venue-year quality scores from publication records and external
/// metrics, and evaluate them.
#[derive(Debug, Parser)]
#[command(name = "venuescore", version, after_long_help = CONFIG_HELP)]
struct Cli {
    /// Pipeline configuration file (TOML). See `--help` for every key.
    #[arg(short, long, global = true, default_value = "venuescore.toml")]
    config: PathBuf,

    /// Print errors to stderr as one JSON object.
    #[arg(long, global = true)]
    json_errors: bool,

    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read the configured corpus source, apply filters and venue merges,
    /// and write the normalized corpus.
    Ingest,
    /// Fit venue scores against one target metric.
    Train {
        /// faculty, nsf or salary.
        #[arg(long)]
        metric: String,
    },
    /// Z-normalize the trained models and average them into `combined`.
    Combine,
    /// Rank venues by their mean score over the configured years.
    Rank {
        #[arg(long, default_value = "combined")]
        model: String,
    },
    /// Score every author, and every university when [faculty] is set.
    Score {
        #[arg(long, default_value = "combined")]
        model: String,
    },
    /// Spearman, Kendall and Pearson correlations between score tables.
    Correlate {
        /// Two or more `name<TAB>score` tables.
        #[arg(required = true, num_args = 2..)]
        tables: Vec<PathBuf>,
        /// Output file name inside output_dir.
        #[arg(long, default_value = "correlation.json")]
        out: String,
    },
    /// Co-authorship PageRank for authors and venues.
    Pagerank,
    /// LDA topic vectors for venues, silhouette sweep, k-means clusters and
    /// university fingerprints.
    Cluster,
    /// Mean yearly score by career year.
    Aging {
        #[arg(long, default_value = "combined")]
        model: String,
    },
    /// Ridge regression of per-paper scores onto their authors.
    CreditSplit {
        #[arg(long, default_value = "combined")]
        model: String,
    },
    /// Write a synthetic fixture with planted scores and a pipeline config
    /// that runs on it.
    Generate {
        /// Destination directory.
        #[arg(long)]
        out: PathBuf,
        /// Optional TOML file with a [synth] section.
        #[arg(long)]
        synth: Option<PathBuf>,
        /// Overrides the fixture seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print an example configuration with every default filled in.
    InitConfig,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Train { .. } => "train",
            Command::Combine => "combine",
            Command::Rank { .. } => "rank",
            Command::Score { .. } => "score",
            Command::Correlate { .. } => "correlate",
            Command::Pagerank => "pagerank",
            Command::Cluster => "cluster",
            Command::Aging { .. } => "aging",
            Command::CreditSplit { .. } => "credit_split",
            Command::Generate { .. } => "generate",
            Command::InitConfig => "init_config",
        }
    }
}

fn generate(out: &Path, synth: Option<&Path>, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg = match synth {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            toml::from_str::<GenerateConfig>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
                .synth
        }
        None => GenerateConfig::default().synth,
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    commands::cmd_generate(&cfg, out)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::InitConfig => {
            print!("{}", config::example_toml());
            return Ok(());
        }
        Command::Generate { out, synth, seed } => return generate(out, synth.as_deref(), *seed),
        _ => {}
    }
    let (cfg, bytes) = PipelineConfig::load(&cli.config)?;
    let name = cli.command.name();
    let manifest_name = match &cli.command {
        Command::Train { metric } => format!("train_{metric}"),
        Command::Rank { model }
        | Command::Score { model }
        | Command::Aging { model }
        | Command::CreditSplit { model } => {
            format!("{name}_{model}")
        }
        _ => name.to_string(),
    };
    let mut run = Run::new(&cfg.output_dir, &manifest_name, cfg.seed, &bytes)?;
    match &cli.command {
        Command::Ingest => commands::ingest(&cfg, &mut run)?,
        Command::Train { metric } => commands::cmd_train(&cfg, &mut run, metric)?,
        Command::Combine => commands::cmd_combine(&cfg, &mut run)?,
        Command::Rank { model } => commands::cmd_rank(&cfg, &mut run, model)?,
        Command::Score { model } => commands::cmd_score(&cfg, &mut run, model)?,
        Command::Correlate { tables, out } => commands::cmd_correlate(&cfg, &mut run, tables, out)?,
        Command::Pagerank => commands::cmd_pagerank(&cfg, &mut run)?,
        Command::Cluster => commands::cmd_cluster(&cfg, &mut run)?,
        Command::Aging { model } => commands::cmd_aging(&cfg, &mut run, model)?,
        Command::CreditSplit { model } => commands::cmd_credit_split(&cfg, &mut run, model)?,
        Command::Generate { .. } | Command::InitConfig => unreachable!(),
    }
    let manifest = run.finish()?;
    log::info!("manifest written to {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if cli.json_errors {
                eprintln!("{}", e.to_json());
            } else {
                eprintln!("venuescore: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
