//! `coil` command-line driver.
//!
//! Exit status is 0 on success, 1 when arguments or configurations are
//! invalid, and 2 when input cannot be read, parsed or verified.

mod commands;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coil::bm25::Bm25Params;
use coil::eval::MetricSpec;
use coil::Mode;

#[derive(Debug, Parser)]
#[command(name = "coil", version, about = "Contextualized exact lexical match retrieval")]
struct Cli {
    /// Worker threads for encoding and search. Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a JSONL corpus into an encoded-record file with the stub encoder.
    Encode(EncodeArgs),
    /// Build an index directory from an encoded-record file.
    Build(BuildArgs),
    /// Search an index and write a TREC run file.
    Search(SearchArgs),
    /// Rank a corpus with BM25 and write a TREC run file.
    Bm25(Bm25Args),
    /// Score a run file against qrels.
    Eval(EvalArgs),
    /// Sample hard negatives from BM25 results as training examples.
    SampleNegs(SampleNegsArgs),
    /// Print index statistics as JSON.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Corpus JSONL with `id` and `text` fields.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Encoded-record output. The encoder description is written next to it
    /// as `<out>.encoder.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed of the stub contextualizer and projections.
    #[arg(long, default_value_t = 0)]
    pub stub_seed: u64,
    /// Contextualizer output dimension.
    #[arg(long, default_value_t = 768)]
    pub n_lm: usize,
    /// Token vector dimension; 0 disables token matching.
    #[arg(long, default_value_t = 32)]
    pub n_t: usize,
    /// CLS vector dimension; 0 disables CLS matching.
    #[arg(long, default_value_t = 768)]
    pub n_c: usize,
    /// Layer-normalize projected CLS vectors.
    #[arg(long)]
    pub layer_norm: bool,
    /// Document tokens kept after truncation.
    #[arg(long, default_value_t = 512)]
    pub max_doc_tokens: usize,
    /// Neighbours on each side mixed into a token's vector.
    #[arg(long, default_value_t = 2)]
    pub window: usize,
    /// Weight of the neighbour mean, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub mix_weight: f64,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Encoded-record file.
    #[arg(long)]
    pub encoded: PathBuf,
    /// Output index directory.
    #[arg(long)]
    pub index: PathBuf,
    /// Encoder description stored in the index for query encoding.
    /// Defaults to `<encoded>.encoder.json` when that file exists.
    #[arg(long)]
    pub encoder: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Index directory.
    #[arg(long)]
    pub index: PathBuf,
    /// Query JSONL, encoded with the encoder stored in the index.
    #[arg(
        long,
        required_unless_present = "encoded_queries",
        conflicts_with = "encoded_queries"
    )]
    pub queries: Option<PathBuf>,
    /// Pre-encoded queries in encoded-record format.
    #[arg(long)]
    pub encoded_queries: Option<PathBuf>,
    /// Results per query.
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    /// tok, full or cls_only. Defaults to every component the index has.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Run file output.
    #[arg(long)]
    pub out: PathBuf,
    /// Run tag. Defaults to the mode name.
    #[arg(long)]
    pub tag: Option<String>,
    /// Print one JSON line of search counters per query to stdout.
    #[arg(long)]
    pub instrument: bool,
}

#[derive(Debug, Args)]
pub struct Bm25Args {
    /// Corpus JSONL.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Query JSONL.
    #[arg(long)]
    pub queries: PathBuf,
    #[command(flatten)]
    pub params: Bm25Flags,
    /// Results per query.
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    /// Run file output.
    #[arg(long)]
    pub out: PathBuf,
    /// Run tag.
    #[arg(long, default_value = "bm25")]
    pub tag: String,
    /// Document tokens kept after truncation.
    #[arg(long, default_value_t = 512)]
    pub max_doc_tokens: usize,
}

#[derive(Debug, Args)]
pub struct Bm25Flags {
    /// Term-frequency saturation.
    #[arg(long, default_value_t = 1.2)]
    pub k1: f64,
    /// Length normalization, in [0, 1].
    #[arg(long, default_value_t = 0.75)]
    pub b: f64,
    /// Query term-frequency saturation.
    #[arg(long, default_value_t = 0.0)]
    pub k2: f64,
}

impl Bm25Flags {
    pub fn params(&self) -> Bm25Params {
        Bm25Params {
            k1: self.k1,
            b: self.b,
            k2: self.k2,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// TREC run file.
    #[arg(long)]
    pub run: PathBuf,
    /// TREC qrels file.
    #[arg(long)]
    pub qrels: PathBuf,
    /// Comma-separated metrics: mrr@K, recall@K, ndcg@K.
    #[arg(long, value_delimiter = ',', default_value = "mrr@10,recall@1000,ndcg@10")]
    pub metrics: Vec<MetricSpec>,
}

#[derive(Debug, Args)]
pub struct SampleNegsArgs {
    /// Corpus JSONL.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Query JSONL.
    #[arg(long)]
    pub queries: PathBuf,
    /// Qrels naming the positives; relevance ≥ 1 counts.
    #[arg(long)]
    pub qrels: PathBuf,
    /// BM25 results considered per query.
    #[arg(long, default_value_t = 1000)]
    pub depth: usize,
    /// Negatives per example.
    #[arg(long, default_value_t = 7)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training-example JSONL output.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub params: Bm25Flags,
    /// Document tokens kept after truncation.
    #[arg(long, default_value_t = 512)]
    pub max_doc_tokens: usize,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Index directory.
    #[arg(long)]
    pub index: PathBuf,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<coil::Error>() {
            return if e.is_data_error() { 2 } else { 1 };
        }
        if cause.downcast_ref::<io::Error>().is_some() || cause.downcast_ref::<serde_json::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Encode(a) => commands::encode(&a, &mut out),
        Command::Build(a) => commands::build(&a, &mut out),
        Command::Search(a) => commands::search(&a, &mut out),
        Command::Bm25(a) => commands::bm25(&a),
        Command::Eval(a) => commands::eval(&a, &mut out),
        Command::SampleNegs(a) => commands::sample_negs(&a, &mut out),
        Command::Stats(a) => commands::stats(&a, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.threads {
        Some(0) => Err(anyhow::anyhow!("--threads must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(e.into()),
        },
        None => run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
