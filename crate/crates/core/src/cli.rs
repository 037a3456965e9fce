//! Batch command line: `label`, `eval`, `graph expand` and `dataset`.
//!
//! Exit codes: 0 on success, 1 on fatal configuration or I/O errors, 2 when
//! `label` finished but some topics failed (those carry an `"error"` field in
//! the output). Every command that writes a file also writes
//! `<file>.manifest.json` echoing the configuration and the input digest.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conceptnet::{ConceptNetClient, ConceptNetConfig, BASE_URL_ENV, DEFAULT_BASE_URL};
use crate::datasets::{self, DatasetFormat, DatasetSpec};
use crate::embedding::{BackendKind, Embedder, EmbedderConfig, EMBED_URL_ENV, HASH_MODEL_ID};
use crate::evaluation::{self, EvalMode, EvalReport, PairsFile, ScoresFile};
use crate::graph::{connected_components, expand_graph, ExpansionConfig};
use crate::labeling::{self, Algorithm};
use crate::types::{LabelResult, Topic};

pub const CACHE_DIR_ENV: &str = "TOPICLABEL_CACHE_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "topiclabel", version, about = "Label topic-model word lists")]
struct Cli {
    /// Cache directory for embeddings and ConceptNet responses
    #[arg(long, global = true, env = CACHE_DIR_ENV)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Label every topic of a dataset
    Label(LabelArgs),
    /// Score labeled results against the dataset's references
    Eval(EvalArgs),
    /// Knowledge-graph operations
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Dataset conversion and validation
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
}

#[derive(Debug, Subcommand)]
enum GraphCommand {
    /// Grow a ConceptNet graph from seed terms and export it as JSON
    Expand(GraphExpandArgs),
}

#[derive(Debug, Subcommand)]
enum DatasetCommand {
    /// Convert an external corpus into topics JSONL
    Convert(ConvertArgs),
    /// Print topic/reference counts and the words-per-topic histogram
    Validate(InputArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EmbedderKind {
    Http,
    TestHash,
}

#[derive(Debug, Clone, Args)]
struct EmbedderArgs {
    #[arg(long, value_enum, default_value = "http")]
    embedder: EmbedderKind,
    /// Embedding server base URL
    #[arg(long, env = EMBED_URL_ENV)]
    embedder_url: Option<String>,
    #[arg(long, default_value = "all-MiniLM-L12-v2")]
    model: String,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
}

#[derive(Debug, Clone, Args)]
struct ExpansionArgs {
    #[arg(long, default_value_t = 3)]
    hops: usize,
    #[arg(long, default_value_t = 50)]
    edge_limit: usize,
    #[arg(long, default_value_t = 5000)]
    max_nodes: usize,
    /// Spend the whole hop budget even once all seeds are connected
    #[arg(long)]
    keep_expanding: bool,
    /// Answer ConceptNet queries from the cache only
    #[arg(long)]
    offline: bool,
    #[arg(long, env = BASE_URL_ENV, default_value = DEFAULT_BASE_URL)]
    conceptnet_url: String,
    /// ConceptNet requests per second
    #[arg(long, default_value_t = 2.0)]
    rate: f64,
}

#[derive(Debug, Clone, Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "topics_jsonl")]
    format: DatasetFormat,
}

#[derive(Debug, Args)]
struct LabelArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "dsl")]
    algorithm: AlgorithmArg,
    #[command(flatten)]
    embedder: EmbedderArgs,
    #[command(flatten)]
    expansion: ExpansionArgs,
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Dsl,
    Gel,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Cosine,
    Bertscore,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Label results (JSONL written by `label`)
    #[arg(long)]
    results: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "cosine")]
    mode: ModeArg,
    #[command(flatten)]
    embedder: EmbedderArgs,
    /// Write candidate/reference pairs here for an external BERTScore scorer
    #[arg(long)]
    external: Option<PathBuf>,
    /// Scores produced by the external scorer for the pairs file
    #[arg(long)]
    external_scores: Option<PathBuf>,
    /// JSON report path (default: <results>.eval.json)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GraphExpandArgs {
    /// Comma-separated seed terms
    #[arg(long, value_delimiter = ',', conflicts_with = "input")]
    seeds: Vec<String>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "topics_jsonl")]
    format: DatasetFormat,
    /// Topic id whose words seed the graph (required when the dataset has several topics)
    #[arg(long)]
    topic: Option<String>,
    #[command(flatten)]
    expansion: ExpansionArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long)]
    from: DatasetFormat,
    #[arg(long, default_value = "topics_jsonl")]
    to: DatasetFormat,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Everything that determines a labeling run; echoed into its manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub embedder: EmbedderConfig,
    pub expansion: ExpansionConfig,
    pub input: DatasetSpec,
    pub output_path: PathBuf,
    pub offline: bool,
    pub parallelism: usize,
}

/// One line of `label` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelRecord {
    Labeled(LabelResult),
    Failed { topic_id: String, error: String },
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    config: C,
    inputs: Vec<InputDigest>,
    outputs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct InputDigest {
    path: PathBuf,
    sha256: String,
}

fn digest(path: &Path) -> Result<InputDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(InputDigest { path: path.to_path_buf(), sha256: format!("{:x}", Sha256::digest(&bytes)) })
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_manifest<C: Serialize>(command: &str, config: C, inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        inputs: inputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
        outputs: outputs.iter().map(|p| p.to_path_buf()).collect(),
    };
    let primary = outputs.first().ok_or_else(|| anyhow!("manifest needs an output"))?;
    write_atomic(&manifest_path(primary), &serde_json::to_string_pretty(&manifest)?)
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let mut tmp_name = path.file_name().map(OsString::from).unwrap_or_default();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn embedder_config(args: &EmbedderArgs, cache_dir: Option<&Path>) -> EmbedderConfig {
    let mut config = match args.embedder {
        EmbedderKind::TestHash => EmbedderConfig::test_hash(),
        EmbedderKind::Http => EmbedderConfig::http(args.embedder_url.clone().unwrap_or_default(), args.model.clone()),
    };
    if config.backend == BackendKind::TestHash {
        config.model_id = HASH_MODEL_ID.to_string();
    }
    config.batch_size = args.batch_size;
    config.timeout_ms = args.timeout_ms;
    config.cache_dir = cache_dir.map(Path::to_path_buf);
    config
}

fn expansion_config(args: &ExpansionArgs) -> ExpansionConfig {
    ExpansionConfig {
        max_hops: args.hops,
        per_term_edge_limit: args.edge_limit,
        max_nodes: args.max_nodes,
        stop_when_connected: !args.keep_expanding,
    }
}

fn conceptnet_client(args: &ExpansionArgs, cache_dir: Option<&Path>) -> Result<ConceptNetClient> {
    if args.offline && cache_dir.is_none() {
        bail!("--offline needs --cache-dir (or {CACHE_DIR_ENV})");
    }
    Ok(ConceptNetClient::new(ConceptNetConfig {
        base_url: args.conceptnet_url.clone(),
        cache_dir: cache_dir.map(Path::to_path_buf),
        offline: args.offline,
        requests_per_second: args.rate,
        ..ConceptNetConfig::default()
    }))
}

fn dataset_spec(args: &InputArgs) -> DatasetSpec {
    let name = args.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    DatasetSpec::new(name, args.format, &args.input)
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
        }
    };
    let cache_dir = cli.cache_dir.as_deref();
    let outcome = match &cli.command {
        Command::Label(args) => cmd_label(args, cache_dir),
        Command::Eval(args) => cmd_eval(args, cache_dir).map(|_| EXIT_OK),
        Command::Graph { command: GraphCommand::Expand(args) } => cmd_graph_expand(args, cache_dir).map(|_| EXIT_OK),
        Command::Dataset { command: DatasetCommand::Convert(args) } => cmd_convert(args).map(|_| EXIT_OK),
        Command::Dataset { command: DatasetCommand::Validate(args) } => cmd_validate(args).map(|_| EXIT_OK),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FATAL
        }
    }
}

fn cmd_label(args: &LabelArgs, cache_dir: Option<&Path>) -> Result<i32> {
    let config = RunConfig {
        algorithm: match args.algorithm {
            AlgorithmArg::Dsl => Algorithm::Dsl,
            AlgorithmArg::Gel => Algorithm::Gel,
        },
        embedder: embedder_config(&args.embedder, cache_dir),
        expansion: expansion_config(&args.expansion),
        input: dataset_spec(&args.input),
        output_path: args.out.clone(),
        offline: args.expansion.offline,
        parallelism: args.parallelism,
    };
    if config.parallelism == 0 {
        bail!("--parallelism must be positive");
    }
    config.expansion.validate()?;
    let topics = datasets::load_topics(&config.input)?;
    let embedder = Embedder::from_config(&config.embedder)?;
    let client = match config.algorithm {
        Algorithm::Gel => Some(conceptnet_client(&args.expansion, cache_dir)?),
        Algorithm::Dsl => None,
    };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.parallelism).build()?;
    let records: Vec<LabelRecord> = pool.install(|| {
        topics
            .par_iter()
            .map(|topic| {
                let outcome = match &client {
                    None => labeling::dsl(topic, &embedder),
                    Some(client) => labeling::gel(topic, &embedder, &config.expansion, client),
                };
                match outcome {
                    Ok(result) => LabelRecord::Labeled(result),
                    Err(e) => {
                        log::warn!("topic {}: {e}", topic.id());
                        LabelRecord::Failed { topic_id: topic.id().to_string(), error: e.to_string() }
                    }
                }
            })
            .collect()
    });

    let mut out = String::new();
    for record in &records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    write_atomic(&config.output_path, &out)?;
    write_manifest("label", &config, &[&config.input.path], &[&config.output_path])?;

    let failed = records.iter().filter(|r| matches!(r, LabelRecord::Failed { .. })).count();
    eprintln!("labeled {} of {} topics -> {}", records.len() - failed, records.len(), config.output_path.display());
    Ok(if failed > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

/// Reads `label` output, skipping topics that failed.
pub fn read_label_results(path: &Path) -> Result<Vec<LabelResult>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut results = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        match serde_json::from_str(line).with_context(|| format!("{}:{}", path.display(), i + 1))? {
            LabelRecord::Labeled(r) => results.push(r),
            LabelRecord::Failed { topic_id, error } => log::warn!("skipping failed topic {topic_id}: {error}"),
        }
    }
    Ok(results)
}

fn cmd_eval(args: &EvalArgs, cache_dir: Option<&Path>) -> Result<()> {
    let results = read_label_results(&args.results)?;
    let spec = dataset_spec(&args.input);
    let topics: Vec<Topic> = datasets::load_topics(&spec)?;
    let mode = match args.mode {
        ModeArg::Cosine => EvalMode::Cosine,
        ModeArg::Bertscore => EvalMode::Bertscore,
    };
    let out = args.out.clone().unwrap_or_else(|| args.results.with_extension("eval.json"));

    let report: EvalReport = if let Some(pairs_path) = &args.external {
        if mode != EvalMode::Bertscore {
            bail!("--external only applies to --mode bertscore");
        }
        let pairs: PairsFile = evaluation::external_pairs(&results, &topics)?;
        write_atomic(pairs_path, &serde_json::to_string_pretty(&pairs)?)?;
        eprintln!("wrote {} pairs to {}", pairs.pairs.len(), pairs_path.display());
        let Some(scores_path) = &args.external_scores else {
            eprintln!("score the pairs externally, then rerun with --external-scores");
            return Ok(());
        };
        let text = fs::read_to_string(scores_path).with_context(|| format!("reading {}", scores_path.display()))?;
        let scores: ScoresFile =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", scores_path.display()))?;
        evaluation::evaluate_external(&results, &topics, &scores)?
    } else {
        let embedder = Embedder::from_config(&embedder_config(&args.embedder, cache_dir))?;
        evaluation::evaluate_corpus(&results, &topics, mode, &embedder)?
    };

    print!("{}", report.to_table());
    std::io::stdout().flush()?;
    write_atomic(&out, &serde_json::to_string_pretty(&report)?)?;
    let mut inputs: Vec<&Path> = vec![&args.results, &spec.path];
    if let Some(p) = &args.external_scores {
        inputs.push(p);
    }
    #[derive(Serialize)]
    struct EvalEcho<'a> {
        mode: EvalMode,
        embedder: Option<EmbedderConfig>,
        dataset: &'a DatasetSpec,
        external: &'a Option<PathBuf>,
    }
    let echo = EvalEcho {
        mode,
        embedder: args.external.is_none().then(|| embedder_config(&args.embedder, cache_dir)),
        dataset: &spec,
        external: &args.external,
    };
    write_manifest("eval", echo, &inputs, &[&out])?;
    Ok(())
}

fn cmd_graph_expand(args: &GraphExpandArgs, cache_dir: Option<&Path>) -> Result<()> {
    let seeds: Vec<String> = if let Some(input) = &args.input {
        let topics = datasets::load_topics(&DatasetSpec::new("graph", args.format, input))?;
        let topic = match &args.topic {
            Some(id) => {
                topics.iter().find(|t| t.id() == id).ok_or_else(|| anyhow!("no topic `{id}` in {}", input.display()))?
            }
            None if topics.len() == 1 => &topics[0],
            None => bail!("{} holds {} topics; pick one with --topic", input.display(), topics.len()),
        };
        topic.words().to_vec()
    } else {
        args.seeds.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    };
    if seeds.is_empty() {
        bail!("no seeds: pass --seeds or --input");
    }
    let config = expansion_config(&args.expansion);
    let client = conceptnet_client(&args.expansion, cache_dir)?;
    let graph = expand_graph(&seeds, &config, &client)?;
    write_atomic(&args.out, &graph.to_json())?;

    let components = connected_components(&graph);
    println!("components: {}", components.len());
    println!("nodes: {}", graph.node_count());
    println!("edges: {}", graph.edge_count());
    println!("seeds connected: {}", graph.seeds_connected());

    #[derive(Serialize)]
    struct GraphEcho<'a> {
        seeds: &'a [String],
        expansion: ExpansionConfig,
        offline: bool,
        conceptnet_url: &'a str,
    }
    let echo = GraphEcho {
        seeds: &seeds,
        expansion: config,
        offline: args.expansion.offline,
        conceptnet_url: &args.expansion.conceptnet_url,
    };
    let inputs: Vec<&Path> = args.input.iter().map(PathBuf::as_path).collect();
    write_manifest("graph expand", echo, &inputs, &[&args.out])?;
    Ok(())
}

fn cmd_convert(args: &ConvertArgs) -> Result<()> {
    if args.to != DatasetFormat::TopicsJsonl {
        bail!("only topics_jsonl is supported as a conversion target");
    }
    let spec = DatasetSpec::new("convert", args.from, &args.input);
    let topics = datasets::load_topics(&spec)?;
    write_atomic(&args.out, &datasets::to_jsonl(&topics))?;
    let report = datasets::validate_bhatia(&topics);
    eprintln!(
        "converted {} topics ({} reference labels) -> {}",
        report.topic_count,
        report.reference_pairs,
        args.out.display()
    );
    write_manifest("dataset convert", &spec, &[&args.input], &[&args.out])?;
    Ok(())
}

fn cmd_validate(args: &InputArgs) -> Result<()> {
    let topics = datasets::load_topics(&dataset_spec(args))?;
    println!("{}", serde_json::to_string_pretty(&datasets::validate_bhatia(&topics))?);
    Ok(())
}
