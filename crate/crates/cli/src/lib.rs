//! `tabperm` command line: each subcommand reads plain files and writes
//! plain files into an output directory. Every JSON artifact carries a
//! `config` object holding the subcommand, its parameters and the SHA-256 of
//! each input file, so reruns with the same inputs are byte-identical.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use tabperm_core::chain::{self, ChainConfig, ChainModel};
use tabperm_core::codec::{emit_corpus, CorpusSpec};
use tabperm_core::distill::{distill, DependencyGraph};
use tabperm_core::eval::rules::{rules_from_json, rules_to_json, RuleSpec};
use tabperm_core::eval::{evaluate, EvalOptions, LearnerKind, MleSpec, Task};
use tabperm_core::fd::{discover_with, DiscoveryOptions, FunctionalDependency};
use tabperm_core::order::{order_report_json, total_order};
use tabperm_core::sim::{simulate, SimKind, SimSpec};
use tabperm_core::table::{content_hash, load_table, save_table, ColumnKind, Permutation, Schema, Table};
use tabperm_core::Error;

pub const FDS_FILE: &str = "fds.json";
pub const GRAPH_FILE: &str = "graph.json";
pub const ORDER_FILE: &str = "order.json";
pub const CORPUS_FILE: &str = "corpus.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MODEL_FILE: &str = "model.json";
pub const SYNTH_FILE: &str = "synth.csv";
pub const SAMPLE_FILE: &str = "sample.json";
pub const DATA_FILE: &str = "data.csv";
pub const RULES_FILE: &str = "rules.json";
pub const SIMULATE_FILE: &str = "simulate.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const METRICS_TEXT_FILE: &str = "metrics.txt";
pub const PIPELINE_FILE: &str = "pipeline.json";

/// Caps the worker pool used for internal parallelism.
pub const THREADS_ENV: &str = "PAFT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "tabperm", version, about = "Dependency-ordered synthetic table generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// CSV -> functional dependencies (fds.json)
    Discover(DiscoverArgs),
    /// fds.json -> dependency graph (graph.json)
    Distill(DistillArgs),
    /// graph.json -> column order and violation report (order.json)
    Order(OrderArgs),
    /// CSV + order -> text corpus (corpus.txt, manifest.json)
    Encode(EncodeArgs),
    /// CSV + order -> chain model (model.json)
    Fit(FitArgs),
    /// model.json -> synthetic rows (synth.csv)
    Sample(SampleArgs),
    /// Simulated dataset with planted rules (data.csv, rules.json)
    Simulate(SimulateArgs),
    /// Real + synthetic CSV -> metrics (metrics.json, metrics.txt)
    Evaluate(EvaluateArgs),
    /// Every step from discover to evaluate
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DiscoverArgs {
    #[arg(long)]
    #[serde(skip)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub max_lhs: usize,
    /// Largest g3 error a reported dependency may have.
    #[arg(long, default_value_t = 0.01)]
    pub g3: f64,
    /// Quantile bins for numeric columns before discovery; 0 disables.
    #[arg(long, default_value_t = 32)]
    pub fd_bins: usize,
    /// Keep dependencies whose determinant is a key.
    #[arg(long)]
    pub keep_keys: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DistillArgs {
    /// An fds.json written by `discover`.
    #[arg(long)]
    #[serde(skip)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OrderArgs {
    /// A graph.json written by `distill`.
    #[arg(long)]
    #[serde(skip)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fixed,
    Random,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EncodeArgs {
    #[arg(long)]
    #[serde(skip)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// An order.json; schema order when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub permutation: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Fixed)]
    pub mode: Mode,
    /// Required with `--mode random`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    #[serde(skip)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// An order.json; schema order when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub permutation: Option<PathBuf>,
    /// Preceding columns each conditional sees.
    #[arg(long, default_value_t = 1)]
    pub context: usize,
    #[arg(long, default_value_t = 16)]
    pub bins: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Rows a context needs before it is used instead of backing off.
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SampleArgs {
    /// A model.json written by `fit`.
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KindArg {
    #[value(name = "disjoint_rects")]
    DisjointRects,
    #[value(name = "overlapping_rects")]
    OverlappingRects,
    #[value(name = "gaussian_blobs")]
    GaussianBlobs,
    #[value(name = "concentric_rings")]
    ConcentricRings,
}

impl From<KindArg> for SimKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::DisjointRects => SimKind::DisjointRects,
            KindArg::OverlappingRects => SimKind::OverlappingRects,
            KindArg::GaussianBlobs => SimKind::GaussianBlobs,
            KindArg::ConcentricRings => SimKind::ConcentricRings,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 4)]
    pub categories: usize,
    #[arg(long, default_value_t = 4000)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerArg {
    #[value(name = "logistic_regression", alias = "logistic")]
    LogisticRegression,
    #[value(name = "random_forest", alias = "forest")]
    RandomForest,
}

impl From<LearnerArg> for LearnerKind {
    fn from(l: LearnerArg) -> Self {
        match l {
            LearnerArg::LogisticRegression => LearnerKind::LogisticRegression,
            LearnerArg::RandomForest => LearnerKind::RandomForest,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskArg {
    Classification,
    Regression,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvaluateArgs {
    /// The real table.
    #[arg(long)]
    #[serde(skip)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub synth: PathBuf,
    /// A rules JSON file such as the one `simulate` writes.
    #[arg(long)]
    #[serde(skip)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [LearnerArg::LogisticRegression, LearnerArg::RandomForest])]
    pub learner: Vec<LearnerArg>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Column for the train-on-synthetic, test-on-real utility score.
    #[arg(long, requires = "task")]
    pub target: Option<String>,
    #[arg(long, value_enum, requires = "target")]
    pub task: Option<TaskArg>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PipelineArgs {
    #[arg(long)]
    #[serde(skip)]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub max_lhs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub g3: f64,
    #[arg(long, default_value_t = 32)]
    pub fd_bins: usize,
    #[arg(long)]
    pub keep_keys: bool,
    #[arg(long, value_enum, default_value_t = Mode::Fixed)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1)]
    pub context: usize,
    #[arg(long, default_value_t = 16)]
    pub bins: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    /// Synthetic rows to draw; defaults to the input row count.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub rules: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [LearnerArg::LogisticRegression, LearnerArg::RandomForest])]
    pub learner: Vec<LearnerArg>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, requires = "task")]
    pub target: Option<String>,
    #[arg(long, value_enum, requires = "target")]
    pub task: Option<TaskArg>,
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())).into())
}

fn read_json(bytes: &[u8]) -> CliResult<Value> {
    serde_json::from_slice(bytes).map_err(|e| Error::Json(e.to_string()).into())
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())).into())
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())).into())
}

fn write_json(dir: &Path, name: &str, value: &Value) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    write_file(dir, name, s.as_bytes())
}

/// The `config` object embedded in artifacts. Inputs are identified by
/// content hash rather than path.
fn config<T: Serialize>(command: &str, params: &T, inputs: &[(&str, &[u8])]) -> Value {
    let hashes: serde_json::Map<String, Value> = inputs
        .iter()
        .map(|(name, bytes)| (name.to_string(), Value::String(content_hash(bytes))))
        .collect();
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "params": params,
        "inputs": hashes,
    })
}

fn with_config(mut body: Value, config: Value) -> Value {
    let obj = body.as_object_mut().expect("artifact bodies are objects");
    obj.insert("config".into(), config);
    body
}

fn fd_json(fd: &FunctionalDependency, schema: &Schema) -> Value {
    let names = |s: &[usize]| s.iter().map(|&c| schema.column(c).name.clone()).collect::<Vec<_>>();
    json!({ "lhs": names(&fd.lhs), "rhs": names(&fd.rhs), "g3": fd.g3 })
}

fn parse_schema(v: &Value) -> CliResult<Schema> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Json(format!("schema: {e}")).into())
}

fn parse_fds(v: &Value, schema: &Schema) -> CliResult<Vec<FunctionalDependency>> {
    let list = v.as_array().ok_or_else(|| Error::Json("`fds` must be an array".into()))?;
    let names = |v: &Value| -> CliResult<Vec<usize>> {
        v.as_array()
            .ok_or_else(|| Error::Json("lhs/rhs must be arrays".into()))?
            .iter()
            .map(|n| {
                let n = n.as_str().ok_or_else(|| Error::Json("column names must be strings".into()))?;
                Ok(schema.require(n)?)
            })
            .collect()
    };
    list.iter()
        .map(|fd| {
            let g3 = fd["g3"].as_f64().ok_or_else(|| Error::Json("g3 must be a number".into()))?;
            Ok(FunctionalDependency::new(names(&fd["lhs"])?, names(&fd["rhs"])?, g3)?)
        })
        .collect()
}

fn load_csv(bytes: &[u8], kinds: Option<&Schema>) -> CliResult<Table> {
    let overrides: Option<HashMap<String, ColumnKind>> =
        kinds.map(|s| s.columns().iter().map(|c| (c.name.clone(), c.kind)).collect());
    Ok(load_table(bytes, overrides.as_ref())?)
}

/// Permutation named in an order.json, or schema order.
fn read_permutation(path: Option<&Path>, schema: &Schema) -> CliResult<(Permutation, Option<Vec<u8>>)> {
    let Some(path) = path else {
        return Ok((Permutation::identity(schema.len()), None));
    };
    let bytes = read_input(path)?;
    let v = read_json(&bytes)?;
    let names: Vec<String> = serde_json::from_value(v["permutation"].clone())
        .map_err(|e| Error::Json(format!("permutation: {e}")))?;
    Ok((Permutation::from_names(&names, schema)?, Some(bytes)))
}

pub fn cmd_discover(a: &DiscoverArgs) -> CliResult<()> {
    let bytes = read_input(&a.input)?;
    prepare_out(&a.out)?;
    let table = load_csv(&bytes, None)?;
    let opts = DiscoveryOptions {
        max_lhs: a.max_lhs,
        error_threshold: a.g3,
        numeric_bins: (a.fd_bins > 0).then_some(a.fd_bins),
        drop_keys: !a.keep_keys,
    };
    let fds = discover_with(&table, &opts)?;
    let schema = table.schema();
    let body = json!({
        "schema": schema,
        "fds": fds.iter().map(|f| fd_json(f, schema)).collect::<Vec<_>>(),
    });
    write_json(&a.out, FDS_FILE, &with_config(body, config("discover", a, &[("input", &bytes)])))
}

pub fn cmd_distill(a: &DistillArgs) -> CliResult<()> {
    let bytes = read_input(&a.input)?;
    prepare_out(&a.out)?;
    let doc = read_json(&bytes)?;
    let schema = parse_schema(&doc["schema"])?;
    let fds = parse_fds(&doc["fds"], &schema)?;
    let graph = distill(&fds, schema.len())?;
    let body = json!({ "schema": schema, "graph": graph.to_json_value(&schema) });
    write_json(&a.out, GRAPH_FILE, &with_config(body, config("distill", a, &[("input", &bytes)])))
}

pub fn cmd_order(a: &OrderArgs) -> CliResult<()> {
    let bytes = read_input(&a.input)?;
    prepare_out(&a.out)?;
    let doc = read_json(&bytes)?;
    let schema = parse_schema(&doc["schema"])?;
    let graph = DependencyGraph::from_json_value(&doc["graph"], &schema)?;
    let result = total_order(&graph);
    let body = order_report_json(&graph, &result, &schema);
    write_json(&a.out, ORDER_FILE, &with_config(body, config("order", a, &[("input", &bytes)])))
}

pub fn cmd_encode(a: &EncodeArgs) -> CliResult<()> {
    let bytes = read_input(&a.input)?;
    let table = load_csv(&bytes, None)?;
    let spec_and_perm = match a.mode {
        Mode::Fixed => {
            let (k, pbytes) = read_permutation(a.permutation.as_deref(), table.schema())?;
            (CorpusSpec::FixedOrder(k), pbytes)
        }
        Mode::Random => {
            let seed = a
                .seed
                .ok_or_else(|| CliError::Usage("--mode random requires --seed".into()))?;
            (CorpusSpec::RandomPerRow { seed }, None)
        }
    };
    prepare_out(&a.out)?;
    let (spec, pbytes) = spec_and_perm;
    let corpus = emit_corpus(&table, &spec)?;
    let mut inputs: Vec<(&str, &[u8])> = vec![("input", &bytes)];
    if let Some(p) = &pbytes {
        inputs.push(("permutation", p));
    }
    write_file(&a.out, CORPUS_FILE, corpus.text().as_bytes())?;
    let manifest = serde_json::to_value(&corpus.manifest).expect("manifest serializes");
    write_json(&a.out, MANIFEST_FILE, &with_config(manifest, config("encode", a, &inputs)))
}

pub fn cmd_fit(a: &FitArgs) -> CliResult<()> {
    let bytes = read_input(&a.input)?;
    let table = load_csv(&bytes, None)?;
    let (k, pbytes) = read_permutation(a.permutation.as_deref(), table.schema())?;
    prepare_out(&a.out)?;
    let cfg = ChainConfig {
        context: a.context,
        bins: a.bins,
        alpha: a.alpha,
        min_count: a.min_count,
    };
    let model = chain::fit(&table, &k, cfg)?;
    let mut inputs: Vec<(&str, &[u8])> = vec![("input", &bytes)];
    if let Some(p) = &pbytes {
        inputs.push(("permutation", p));
    }
    let model_value: Value = serde_json::from_str(&model.to_json()).expect("model json parses");
    let body = json!({ "model": model_value });
    write_json(&a.out, MODEL_FILE, &with_config(body, config("fit", a, &inputs)))
}

pub fn cmd_sample(a: &SampleArgs) -> CliResult<()> {
    let bytes = read_input(&a.model)?;
    prepare_out(&a.out)?;
    let doc = read_json(&bytes)?;
    let model = ChainModel::from_json(&doc["model"].to_string())?;
    let synth = model.sample(a.n, a.seed)?;
    let mut csv = Vec::new();
    save_table(&synth, &mut csv)?;
    write_file(&a.out, SYNTH_FILE, &csv)?;
    let body = json!({ "rows": synth.n_rows(), "output": content_hash(&csv) });
    write_json(&a.out, SAMPLE_FILE, &with_config(body, config("sample", a, &[("model", &bytes)])))
}

pub fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    prepare_out(&a.out)?;
    let spec = SimSpec::new(a.kind.into(), a.categories, a.n, a.seed);
    let sim = simulate(&spec)?;
    let mut csv = Vec::new();
    save_table(&sim.table, &mut csv)?;
    write_file(&a.out, DATA_FILE, &csv)?;
    let mut rules = rules_to_json(&sim.rules);
    rules.push('\n');
    write_file(&a.out, RULES_FILE, rules.as_bytes())?;
    let schema = sim.table.schema();
    let body = json!({
        "spec": spec,
        "truth": sim.truth.iter().map(|f| fd_json(f, schema)).collect::<Vec<_>>(),
    });
    write_json(&a.out, SIMULATE_FILE, &with_config(body, config("simulate", a, &[])))
}

pub fn cmd_evaluate(a: &EvaluateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let real_bytes = read_input(&a.input)?;
    let synth_bytes = read_input(&a.synth)?;
    let rules_bytes = a.rules.as_deref().map(read_input).transpose()?;
    prepare_out(&a.out)?;
    let real = load_csv(&real_bytes, None)?;
    let synth = load_csv(&synth_bytes, Some(real.schema()))?;
    let rules: Vec<RuleSpec> = match &rules_bytes {
        Some(b) => rules_from_json(std::str::from_utf8(b).map_err(|e| Error::Json(e.to_string()))?)?,
        None => Vec::new(),
    };
    let opts = EvalOptions {
        learners: a.learner.iter().map(|&l| l.into()).collect(),
        folds: a.folds,
        seed: a.seed,
        mle: match (&a.target, a.task) {
            (Some(target), Some(task)) => Some(MleSpec {
                target: target.clone(),
                task: match task {
                    TaskArg::Classification => Task::Classification,
                    TaskArg::Regression => Task::Regression,
                },
            }),
            _ => None,
        },
    };
    let report = evaluate(&real, &synth, &rules, &opts)?;
    let mut inputs: Vec<(&str, &[u8])> = vec![("input", &real_bytes), ("synth", &synth_bytes)];
    if let Some(b) = &rules_bytes {
        inputs.push(("rules", b));
    }
    let body = json!({ "report": report });
    write_json(&a.out, METRICS_FILE, &with_config(body, config("evaluate", a, &inputs)))?;
    let text = report.to_text();
    write_file(&a.out, METRICS_TEXT_FILE, text.as_bytes())?;
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::Core(Error::Io(e.to_string())))
}

pub fn cmd_pipeline(a: &PipelineArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let bytes = read_input(&a.input)?;
    if let Some(r) = &a.rules {
        read_input(r)?;
    }
    prepare_out(&a.out)?;
    let out = a.out.clone();
    let n = match a.n {
        Some(n) => n,
        None => load_csv(&bytes, None)?.n_rows(),
    };
    cmd_discover(&DiscoverArgs {
        input: a.input.clone(),
        out: out.clone(),
        max_lhs: a.max_lhs,
        g3: a.g3,
        fd_bins: a.fd_bins,
        keep_keys: a.keep_keys,
    })?;
    cmd_distill(&DistillArgs {
        input: out.join(FDS_FILE),
        out: out.clone(),
    })?;
    cmd_order(&OrderArgs {
        input: out.join(GRAPH_FILE),
        out: out.clone(),
    })?;
    cmd_encode(&EncodeArgs {
        input: a.input.clone(),
        out: out.clone(),
        permutation: Some(out.join(ORDER_FILE)),
        mode: a.mode,
        seed: Some(a.seed),
    })?;
    cmd_fit(&FitArgs {
        input: a.input.clone(),
        out: out.clone(),
        permutation: Some(out.join(ORDER_FILE)),
        context: a.context,
        bins: a.bins,
        alpha: a.alpha,
        min_count: a.min_count,
    })?;
    cmd_sample(&SampleArgs {
        model: out.join(MODEL_FILE),
        out: out.clone(),
        n,
        seed: a.seed,
    })?;
    cmd_evaluate(
        &EvaluateArgs {
            input: a.input.clone(),
            synth: out.join(SYNTH_FILE),
            rules: a.rules.clone(),
            out: out.clone(),
            seed: a.seed,
            learner: a.learner.clone(),
            folds: a.folds,
            target: a.target.clone(),
            task: a.task,
        },
        stdout,
    )?;
    let artifacts = [
        FDS_FILE,
        GRAPH_FILE,
        ORDER_FILE,
        CORPUS_FILE,
        MANIFEST_FILE,
        MODEL_FILE,
        SYNTH_FILE,
        SAMPLE_FILE,
        METRICS_FILE,
        METRICS_TEXT_FILE,
    ];
    let body = json!({ "artifacts": artifacts });
    write_json(&out, PIPELINE_FILE, &with_config(body, config("pipeline", a, &[("input", &bytes)])))
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n| n > 0)
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on a failed step, 2 on bad usage.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    if let Some(n) = thread_cap() {
        // Only the first call in a process can size the global pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match &cli.command {
        Command::Discover(a) => cmd_discover(a),
        Command::Distill(a) => cmd_distill(a),
        Command::Order(a) => cmd_order(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Evaluate(a) => cmd_evaluate(a, stdout),
        Command::Pipeline(a) => cmd_pipeline(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(CliError::Core(e)) => {
            let obj = json!({ "error": e.kind(), "message": e.to_string() });
            let _ = writeln!(stderr, "{obj}");
            1
        }
    }
}
