mod commands;
mod config;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::Config;

/// Entity-weighted document re-ranking pipeline.
///
/// Every key of the flat config file can also be set with a `DREQ_<KEY>`
/// environment variable (dots become underscores, e.g. `DREQ_BM25_K1`) or
/// with `--set key=value`; later layers win.
#[derive(Debug, Parser)]
#[command(name = "dreq", version)]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true, env = "DREQ_CONFIG")]
    config: Option<PathBuf>,

    /// Seed override (config key `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for per-query stages.
    #[arg(long, global = true, default_value_t = 1, env = "DREQ_THREADS")]
    threads: usize,

    /// Config override `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EntityRankMode {
    Learned,
    Bm25,
    Geeer,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RerankMode {
    Dreq,
    Maxsimcos,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the BM25 inverted index over the corpus.
    BuildIndex,
    /// Retrieve candidate documents for every query (TREC run).
    Retrieve,
    /// Pool the linked entities of each query's candidates.
    PoolEntities,
    /// Write hash-based embedding stores for the corpus, queries and pools.
    SynthEmbed,
    /// Generate a planted-relevance synthetic dataset.
    SynthCorpus {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one entity-ranking head per fold.
    TrainEntityRanker,
    /// Rank each query's pooled entities.
    RankEntities {
        #[arg(long, value_enum, default_value = "learned")]
        mode: EntityRankMode,
    },
    /// Train the scorer per fold on the configured entity ranking.
    TrainDreq {
        /// full, uniform, rr or no-entity; defaults to config `variant`.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Re-rank the candidates out of fold.
    Rerank {
        #[arg(long, value_enum, default_value = "dreq")]
        mode: RerankMode,
        /// Scorer variant to use with `--mode dreq`.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Evaluate a run against the qrels.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        /// Paired t-tests of every metric against this run.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// WIG query performance prediction and difficulty terciles.
    Qpp {
        /// Scored run; defaults to the candidate run.
        #[arg(long)]
        run: Option<PathBuf>,
    },
    /// Per-bin comparison of two runs over queries sorted by baseline effectiveness.
    Difficulty {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value = "ndcg@20")]
        metric: String,
    },
    /// Cross-validated sweep over probability, uniform, rr and no-entity weighting.
    Ablate,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = Config::load(cli.config.as_deref(), &overrides)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()?;
    match cli.command {
        Command::BuildIndex => commands::build_index(&cfg),
        Command::Retrieve => commands::retrieve(&cfg),
        Command::PoolEntities => commands::pool_entities(&cfg),
        Command::SynthEmbed => commands::synth_embed(&cfg),
        Command::SynthCorpus { out } => commands::synth_corpus(&cfg, &out),
        Command::TrainEntityRanker => commands::train_entity_ranker(&cfg),
        Command::RankEntities { mode } => commands::rank_entities(&cfg, mode),
        Command::TrainDreq { variant } => commands::train_dreq(&cfg, variant.as_deref()),
        Command::Rerank { mode, variant } => commands::rerank(&cfg, mode, variant.as_deref()),
        Command::Evaluate { run, baseline } => commands::evaluate(&cfg, &run, baseline.as_deref()),
        Command::Qpp { run } => commands::qpp(&cfg, run.as_deref()),
        Command::Difficulty {
            baseline,
            system,
            metric,
        } => commands::difficulty(&cfg, &baseline, &system, &metric),
        Command::Ablate => commands::ablate(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
