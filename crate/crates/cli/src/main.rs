//! `argon`: index, retrieve, generate training pairs and evaluate.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use argon_core::pipeline::RankerKind;
use argon_core::relevance::NegativeScope;
use argon_core::represent::{ReprKind, SimKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "argon", version, about = "Diverse premise retrieval for argument search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded synthetic corpus with scores and embeddings.
    Fixture(FixtureArgs),
    /// Build the claim and premise indexes.
    Index(IndexArgs),
    /// Retrieve a ranked premise list for one or all query claims.
    Retrieve(RetrieveArgs),
    /// Emit positive and hard-negative training pairs.
    GenPairs(GenPairsArgs),
    /// Score a results file with modified NDCG.
    Evaluate(EvaluateArgs),
    /// Leave-one-out hyperparameter sweep.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct FixtureArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 1,195 judgments over 40 query claims instead of the small default.
    #[arg(long)]
    paper_scale: bool,
    /// Premises per meaning cluster.
    #[arg(long)]
    group_size: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory for claims.idx and premises.idx.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RankerArg {
    BiasedCoreset,
    Kmeans,
    TopK,
}

impl From<RankerArg> for RankerKind {
    fn from(r: RankerArg) -> Self {
        match r {
            RankerArg::BiasedCoreset => RankerKind::BiasedCoreset,
            RankerArg::Kmeans => RankerKind::Kmeans,
            RankerArg::TopK => RankerKind::TopK,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReprArg {
    Bert,
    ClaimSim,
}

impl From<ReprArg> for ReprKind {
    fn from(r: ReprArg) -> Self {
        match r {
            ReprArg::Bert => ReprKind::Bert,
            ReprArg::ClaimSim => ReprKind::ClaimSim,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SimArg {
    Cos,
    L1,
    L2,
}

impl From<SimArg> for SimKind {
    fn from(s: SimArg) -> Self {
        match s {
            SimArg::Cos => SimKind::Cos,
            SimArg::L1 => SimKind::NegL1,
            SimArg::L2 => SimKind::NegL2,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScorerArg {
    Table,
    ZeroShot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NegativesArg {
    Global,
    SameTopic,
}

impl From<NegativesArg> for NegativeScope {
    fn from(n: NegativesArg) -> Self {
        match n {
            NegativesArg::Global => NegativeScope::Global,
            NegativesArg::SameTopic => NegativeScope::SameTopic,
        }
    }
}

/// Pipeline settings shared by `retrieve` and `sweep`. Flags override the
/// config file.
#[derive(Args, Debug)]
struct PipelineArgs {
    /// Corpus directory (claims.jsonl, premises.jsonl, assignments.jsonl, ...).
    #[arg(long)]
    corpus: PathBuf,
    /// Pipeline config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory with prebuilt claims.idx and premises.idx.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Topic for corpus records that lack one.
    #[arg(long)]
    default_topic: Option<String>,
    #[arg(long, value_enum)]
    scorer: Option<ScorerArg>,
    /// Relevance score table (JSON lines).
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Embedding file (binary or JSON lines).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, value_enum)]
    ranker: Option<RankerArg>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long = "repr", value_enum)]
    repr: Option<ReprArg>,
    #[arg(long, value_enum)]
    sim: Option<SimArg>,
    #[arg(long)]
    m_claims: Option<usize>,
    #[arg(long)]
    m_premises: Option<usize>,
    /// Restrict premise expansion to the query's topic.
    #[arg(long)]
    same_topic: bool,
    /// Number of topic claims sampled for claim-sim vectors.
    #[arg(long)]
    claim_sample: Option<usize>,
    /// L2-normalise representation vectors.
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct RetrieveArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, conflicts_with = "all_queries", required_unless_present = "all_queries")]
    query_claim: Option<String>,
    /// Every claim that has judgments.
    #[arg(long)]
    all_queries: bool,
    /// results.jsonl path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenPairsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, value_enum, default_value = "global")]
    negatives: NegativesArg,
    /// Negatives per positive pair.
    #[arg(short = 'L', long = "num-negatives", default_value_t = 2)]
    num_negatives: usize,
    #[arg(long)]
    default_topic: Option<String>,
    /// training_pairs.jsonl path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// results.jsonl from `argon retrieve`.
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    default_topic: Option<String>,
    /// report.json path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Grid file (JSON). Without it the sweep runs the single configured pipeline.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// report.json path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-config, per-query score matrix.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Bad invocation discovered after parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("ARGON_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| usage(format!("ARGON_THREADS must be a positive integer, got `{v}`")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    #[cfg(not(feature = "parallel"))]
    log::debug!("ARGON_THREADS={n} ignored: built without parallelism");
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    match cli.command {
        Command::Fixture(a) => commands::fixture(a),
        Command::Index(a) => commands::index(a),
        Command::Retrieve(a) => commands::retrieve(a),
        Command::GenPairs(a) => commands::gen_pairs(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
    }
}

/// The error chain on one line, skipping causes a message already repeats.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.ends_with(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .format_target(false)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            eprintln!("run `argon --help` for usage");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
