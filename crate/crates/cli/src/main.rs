//! `hybrid-index` command-line front end.
//!
//! Every subcommand reads its inputs, writes to `--out` (or stdout) and never
//! modifies an input file. Failures print a single `error: <code>: <message>`
//! line on stderr; usage errors exit with status 2, everything else with 1.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hybrid_index::eval::{bench_csv, bench_table};
use hybrid_index::io::{self as hio, ResultLine};
use hybrid_index::par::with_threads;
use hybrid_index::search::batch_query;
use hybrid_index::synth::{generate_queries, ground_truth, SynthConfig, SyntheticCorpus};
use hybrid_index::{
    build_hybrid_index, deserialize_index, insert_batch, mark_delete, run_benchmark, serialize_index, validate_corpus,
    BuildParams, DocumentStore, HybridIndex, KnowledgeGraph, QuerySpec, SearchOptions, Triplet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "hybrid-index",
    version,
    about = "Graph index for hybrid dense, sparse, keyword and knowledge-graph retrieval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an index from a corpus and an optional knowledge graph.
    Build(BuildArgs),
    /// Run a query file against an index.
    Query(QueryArgs),
    /// Sweep beam widths and report throughput, recall and nDCG.
    Bench(BenchArgs),
    /// Insert new documents, writing the grown index to --out.
    Insert(InsertArgs),
    /// Mark documents deleted, writing the result to --out.
    Delete(DeleteArgs),
    /// Generate a synthetic corpus with queries and ground truth.
    Gen(GenArgs),
    /// Check corpus, knowledge graph, query and index files.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    kg: Option<PathBuf>,
    #[arg(long, default_value_t = hybrid_index::index::DEFAULT_DEGREE)]
    degree: usize,
    #[arg(long = "knn-k", default_value_t = hybrid_index::knn::DEFAULT_KNN_K)]
    knn_k: usize,
    #[arg(long, default_value_t = hybrid_index::knn::DEFAULT_ITERATIONS)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Default hop cutoff stored with the index.
    #[arg(long = "x-hops", default_value_t = hybrid_index::model::DEFAULT_MAX_HOPS)]
    x_hops: u32,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Overrides every query's k.
    #[arg(long)]
    k: Option<usize>,
    /// Overrides every query's beam width.
    #[arg(long)]
    beam: Option<usize>,
    /// Overrides every query's hop cutoff.
    #[arg(long = "x-hops")]
    x_hops: Option<u32>,
    /// Result file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Beam widths to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 64, 128])]
    beam: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// CSV output; a table goes to stdout either way.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct InsertArgs {
    #[arg(long)]
    index: PathBuf,
    /// Documents to insert.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct DeleteArgs {
    #[arg(long)]
    index: PathBuf,
    /// Document ids to delete.
    #[arg(long, value_delimiter = ',', required = true)]
    ids: Vec<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    docs: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 16)]
    clusters: usize,
    /// Number of queries to generate.
    #[arg(long = "num-queries", default_value_t = 100)]
    num_queries: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 64)]
    beam: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Corpus output.
    #[arg(long)]
    corpus: PathBuf,
    /// Query output.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Exact top-k ground truth for the queries.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Knowledge-graph output; also gives documents entities.
    #[arg(long)]
    kg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    kg: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
}

/// A failure with its machine-readable code.
#[derive(Debug)]
struct Failure {
    code: &'static str,
    msg: String,
}

impl From<hybrid_index::Error> for Failure {
    fn from(e: hybrid_index::Error) -> Self {
        Failure { code: e.code(), msg: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: "io-error", msg: e.to_string() }
    }
}

fn failure(code: &'static str, msg: impl Into<String>) -> Failure {
    Failure { code, msg: msg.into() }
}

type Outcome = Result<(), Failure>;

fn with_path<T>(path: &Path, r: hybrid_index::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure { code: e.code(), msg: format!("{}: {e}", path.display()) })
}

/// One JSON summary line on stdout.
fn report(value: serde_json::Value) -> Outcome {
    let mut out = io::stdout().lock();
    writeln!(out, "{value}")?;
    Ok(())
}

fn load_kg(path: Option<&Path>) -> Result<Option<KnowledgeGraph>, Failure> {
    path.map(|p| with_path(p, hio::read_kg(p)).map(KnowledgeGraph::new)).transpose()
}

fn load_index(path: &Path) -> Result<HybridIndex, Failure> {
    with_path(path, deserialize_index(path, false))
}

fn build(a: BuildArgs) -> Outcome {
    let docs = with_path(&a.corpus, hio::read_corpus(&a.corpus))?;
    let kg = load_kg(a.kg.as_deref())?;
    let params = BuildParams {
        degree: a.degree,
        knn_k: a.knn_k,
        iterations: a.iters,
        seed: a.seed,
        max_hops: a.x_hops,
        ..BuildParams::default()
    };
    let start = Instant::now();
    let index = with_threads(a.common.threads, || -> hybrid_index::Result<HybridIndex> {
        build_hybrid_index(DocumentStore::new(docs)?, kg, params)
    })?;
    let secs = start.elapsed().as_secs_f64();
    let bytes = serialize_index(&index, &a.out)?;
    report(json!({
        "nodes": index.len(),
        "degree": index.degree(),
        "keyword_edges": index.keyword_edge_count(),
        "logical_edges": index.logical_edge_count(),
        "bytes": bytes,
        "build_seconds": secs,
    }))
}

fn load_queries(
    path: &Path,
    k: Option<usize>,
    beam: Option<usize>,
    hops: Option<u32>,
) -> Result<Vec<QuerySpec>, Failure> {
    let mut queries = with_path(path, hio::read_queries(path))?;
    for q in &mut queries {
        if let Some(k) = k {
            q.k = k;
        }
        if let Some(b) = beam {
            q.beam_width = b;
        }
        if let Some(h) = hops {
            q.max_hops = h;
        }
    }
    Ok(queries)
}

fn query(a: QueryArgs) -> Outcome {
    let index = load_index(&a.index)?;
    let queries = load_queries(&a.queries, a.k, a.beam, a.x_hops)?;
    let batch = with_threads(a.common.threads, || batch_query(&queries, &index, &SearchOptions::default()));
    let mut lines = Vec::with_capacity(queries.len());
    for (qid, r) in batch.results.iter().enumerate() {
        match r {
            Ok(r) => lines.push(ResultLine::from_result(qid, r)),
            Err(e) => return Err(Failure { code: e.code(), msg: format!("query {qid}: {e}") }),
        }
    }
    match &a.out {
        Some(p) => hio::write_file(p, &lines)?,
        None => hio::write_lines(io::stdout().lock(), &lines)?,
    }
    log::info!("{} queries in {:.3}s", queries.len(), batch.elapsed.as_secs_f64());
    Ok(())
}

fn bench(a: BenchArgs) -> Outcome {
    let index = load_index(&a.index)?;
    let queries = load_queries(&a.queries, None, None, None)?;
    let truth = with_path(&a.truth, hio::read_truth(&a.truth, queries.len()))?;
    if a.beam.is_empty() {
        return Err(failure("invalid-parameter", "no beam widths given"));
    }
    let rows = with_threads(a.common.threads, || run_benchmark(&index, &queries, &truth, &a.beam, a.k))?;
    if let Some(p) = &a.out {
        fs::write(p, bench_csv(&rows))?;
    }
    print!("{}", bench_table(&rows));
    Ok(())
}

fn insert(a: InsertArgs) -> Outcome {
    let mut index = load_index(&a.index)?;
    let docs = with_path(&a.corpus, hio::read_corpus(&a.corpus))?;
    let start = Instant::now();
    let r = with_threads(a.common.threads, || insert_batch(&mut index, docs))?;
    let secs = start.elapsed().as_secs_f64();
    serialize_index(&index, &a.out)?;
    report(json!({
        "inserted": r.inserted,
        "nodes": index.len(),
        "reverse_updates": r.reverse_updates,
        "logical_refreshed": r.logical_refreshed,
        "bridges": r.bridges,
        "insert_seconds": secs,
    }))
}

fn delete(a: DeleteArgs) -> Outcome {
    let mut index = load_index(&a.index)?;
    let n = mark_delete(&mut index, &a.ids)?;
    serialize_index(&index, &a.out)?;
    report(json!({ "deleted": n, "nodes": index.len() }))
}

fn gen(a: GenArgs) -> Outcome {
    let entities = if a.kg.is_some() { (a.docs as u32 / 4).max(1) } else { 0 };
    let config = SynthConfig {
        docs: a.docs,
        dense_dim: a.dim,
        clusters: a.clusters.max(1),
        entities,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let corpus = SyntheticCorpus::generate(config);
    hio::write_corpus(&a.corpus, &corpus.docs)?;
    if let Some(p) = &a.kg {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed ^ 0x6b67);
        let triplets: Vec<Triplet> = (0..entities as usize * 2)
            .map(|_| Triplet {
                source: rng.random_range(0..entities),
                relation: rng.random_range(0..8),
                target: rng.random_range(0..entities),
            })
            .collect();
        hio::write_kg(p, &triplets)?;
    }
    let queries = generate_queries(&corpus, a.num_queries, None, a.k, a.beam.max(a.k), a.seed.wrapping_add(1));
    if let Some(p) = &a.queries {
        hio::write_queries(p, &queries)?;
    }
    if let Some(p) = &a.truth {
        let store = DocumentStore::new(corpus.docs.clone())?;
        hio::write_truth(p, &ground_truth(&queries, &store)?)?;
    }
    report(json!({ "docs": corpus.docs.len(), "queries": queries.len(), "entities": entities }))
}

fn validate(a: ValidateArgs) -> Outcome {
    if a.corpus.is_none() && a.kg.is_none() && a.queries.is_none() && a.index.is_none() {
        return Err(failure("invalid-parameter", "nothing to validate; pass --corpus, --kg, --queries or --index"));
    }
    let mut summary = serde_json::Map::new();
    let mut dense_dim = None;
    if let Some(p) = &a.corpus {
        let docs = with_path(p, hio::read_corpus(p))?;
        let s = with_path(p, validate_corpus(&docs))?;
        dense_dim = Some(s.dense_dim);
        summary.insert("corpus".into(), serde_json::to_value(s).expect("summary serializes"));
    }
    if let Some(kg) = load_kg(a.kg.as_deref())? {
        summary.insert("kg".into(), json!({ "triplets": kg.triplets().len(), "entities": kg.entity_count() }));
    }
    if let Some(p) = &a.queries {
        let queries = load_queries(p, None, None, None)?;
        for (i, q) in queries.iter().enumerate() {
            q.validate().map_err(|e| Failure { code: e.code(), msg: format!("{}: query {i}: {e}", p.display()) })?;
            if let Some(m) = dense_dim {
                if q.vector.dense().len() != m {
                    return Err(failure(
                        "dimension-mismatch",
                        format!(
                            "{}: query {i} has dense dimension {}, corpus has {m}",
                            p.display(),
                            q.vector.dense().len()
                        ),
                    ));
                }
            }
        }
        summary.insert("queries".into(), json!(queries.len()));
    }
    if let Some(p) = &a.index {
        let index = with_path(p, deserialize_index(p, true))?;
        summary.insert(
            "index".into(),
            json!({ "nodes": index.len(), "degree": index.degree(), "keyword_edges": index.keyword_edge_count(), "logical_edges": index.logical_edge_count() }),
        );
    }
    report(serde_json::Value::Object(summary))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Build(a) => build(a),
        Command::Query(a) => query(a),
        Command::Bench(a) => bench(a),
        Command::Insert(a) => insert(a),
        Command::Delete(a) => delete(a),
        Command::Gen(a) => gen(a),
        Command::Validate(a) => validate(a),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HYBRID_INDEX_LOG", "warn"))
        .format_timestamp_millis()
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid usage").trim_start_matches("error: ");
            eprintln!("error: usage: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}: {}", f.code, one_line(&f.msg));
            ExitCode::FAILURE
        }
    }
}
