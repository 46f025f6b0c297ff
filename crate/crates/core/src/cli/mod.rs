//! Command-line front end: simulation, discovery, evaluation and experiment
//! sweeps, each writing a self-describing output directory.
//!
//! Every command validates its inputs and computes its results before the
//! output directory is touched, so a failed run leaves nothing behind.
//! Exit codes: 0 success, 1 input error, 2 estimation error, 3 internal
//! invariant breach.

mod experiment;
mod io;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::discovery::{discover_dag, discover_ts, learn_emn, DiscoveryConfig, RunStats};
use crate::graph::{ned, ned_star, to_dot, GraphJson};
use crate::models::{
    random_emn, random_max_linear, random_ts_xscm, random_xscm, sample_emn, sample_max_linear, sample_ts_xscm,
    sample_xscm, seeded_rng, EmnSpec, MaxLinearSpec, XscmSpec,
};
use crate::ptcc::NullCentering;
use crate::tla::StandardizedMatrix;
use crate::{Error, Result};

pub use experiment::{cmd_experiment, ExperimentArgs, ExperimentRow, Scenario};
pub use io::{format_f64, ingest_csv, parse_csv, to_csv_string, MIN_ROWS};

#[derive(Debug, Parser)]
#[command(name = "extail", version, about = "Graph learning for heavy-tailed data")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Zero timestamps and runtimes so repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Draw a ground-truth model and sample from it.
    Simulate(SimulateArgs),
    /// Learn a CPDAG (tau = 0) or lagged graph (tau ≥ 1) from a CSV.
    Discover(DiscoverArgs),
    /// Learn an undirected extremal graph from a CSV.
    LearnMn(LearnMnArgs),
    /// Edit distances between a true and an estimated graph.
    Evaluate(EvaluateArgs),
    /// Replicated simulate → learn → evaluate sweeps.
    Experiment(ExperimentArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Discover(_) => "discover",
            Command::LearnMn(_) => "learn-mn",
            Command::Evaluate(_) => "evaluate",
            Command::Experiment(_) => "experiment",
            Command::Replay(_) => "replay",
        }
    }

    fn set_out(&mut self, out: PathBuf) {
        match self {
            Command::Simulate(a) => a.out = out,
            Command::Discover(a) => a.out = out,
            Command::LearnMn(a) => a.out = out,
            Command::Evaluate(a) => a.out = Some(out),
            Command::Experiment(a) => a.out = out,
            Command::Replay(a) => a.out = out,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Xscm,
    TsXscm,
    Emn,
    MaxLinear,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 6)]
    pub p: usize,
    /// Sparsity: edge probability for the structural models, zero
    /// probability for emn.
    #[arg(long, default_value_t = 0.5)]
    pub phi: f64,
    /// Rows (series length for ts-xscm).
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    /// Maximum lag for ts-xscm.
    #[arg(long, default_value_t = 1)]
    pub tau: usize,
    /// Allow contemporaneous effects in ts-xscm.
    #[arg(long)]
    pub contemporaneous: bool,
    #[arg(long, env = "EXTAIL_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Use this model instead of drawing one (JSON as written to spec.json).
    #[arg(long)]
    pub spec_file: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

/// Options shared by the learning commands.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LearnOptions {
    #[arg(long, default_value_t = 0.99)]
    pub q: f64,
    #[arg(long, default_value_t = 0.005)]
    pub alpha: f64,
    #[arg(long)]
    pub max_cond_size: Option<usize>,
    /// Use the values as given (must be positive) instead of rank-transforming.
    #[arg(long)]
    pub no_standardize: bool,
    /// The first CSV line is a header.
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum, default_value_t = NullCentering::CyclicShift)]
    pub centering: NullCentering,
    /// Recorded in the report; learning itself is deterministic.
    #[arg(long, env = "EXTAIL_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DiscoverArgs {
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub opts: LearnOptions,
    #[arg(long, default_value_t = 0)]
    pub tau: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LearnMnArgs {
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub opts: LearnOptions,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    pub truth: PathBuf,
    pub estimate: PathBuf,
    /// Also write metrics.json here.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

/// Flags that affect how a run is recorded but not what it computes.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunContext {
    pub no_timing: bool,
}

impl RunContext {
    fn elapsed_ms(&self, start: Instant) -> u64 {
        if self.no_timing {
            0
        } else {
            start.elapsed().as_millis() as u64
        }
    }

    fn timestamp(&self) -> u64 {
        if self.no_timing {
            return 0;
        }
        if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()) {
            return epoch;
        }
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    }
}

/// Written as `manifest.json` into every output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full command configuration; [`Command::Replay`] re-executes it.
    pub config: Command,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub timestamp: u64,
}

impl RunManifest {
    fn new(config: &Command, seed: Option<u64>, inputs: Vec<String>, outputs: &[&str], ctx: &RunContext) -> Self {
        let mut outputs: Vec<String> = outputs.iter().map(|s| s.to_string()).collect();
        outputs.push("manifest.json".into());
        Self {
            command: config.name().into(),
            config: config.clone(),
            seed,
            inputs,
            outputs,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timestamp: ctx.timestamp(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("manifest {}: {e}", path.display())))
    }
}

/// Files of one run, written only after every result is ready.
struct Outputs {
    files: Vec<(&'static str, String)>,
}

impl Outputs {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn text(&mut self, name: &'static str, body: String) {
        self.files.push((name, body));
    }

    fn json<T: Serialize>(&mut self, name: &'static str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.files.push((name, s));
        Ok(())
    }

    fn names(&self) -> Vec<&'static str> {
        self.files.iter().map(|(n, _)| *n).collect()
    }

    fn commit(mut self, dir: &Path, manifest: &RunManifest) -> Result<()> {
        self.json("manifest.json", manifest)?;
        fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

/// A ground-truth model of any supported family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", content = "spec", rename_all = "kebab-case")]
pub enum ModelSpec {
    Xscm(XscmSpec),
    TsXscm(XscmSpec),
    Emn(EmnSpec),
    MaxLinear(MaxLinearSpec),
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Xscm(_) => ModelKind::Xscm,
            ModelSpec::TsXscm(_) => ModelKind::TsXscm,
            ModelSpec::Emn(_) => ModelKind::Emn,
            ModelSpec::MaxLinear(_) => ModelKind::MaxLinear,
        }
    }

    pub fn generate<R: rand::Rng + ?Sized>(
        kind: ModelKind,
        p: usize,
        phi: f64,
        tau: usize,
        contemporaneous: bool,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(match kind {
            ModelKind::Xscm => ModelSpec::Xscm(random_xscm(p, phi, rng)?),
            ModelKind::TsXscm => ModelSpec::TsXscm(random_ts_xscm(p, phi, tau, rng, contemporaneous)?),
            ModelKind::Emn => ModelSpec::Emn(random_emn(p, phi, rng)?),
            ModelKind::MaxLinear => ModelSpec::MaxLinear(random_max_linear(p, phi, rng)?),
        })
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<StandardizedMatrix> {
        match self {
            ModelSpec::Xscm(s) => sample_xscm(s, n, rng),
            ModelSpec::TsXscm(s) => sample_ts_xscm(s, n, rng),
            ModelSpec::Emn(s) => sample_emn(s, n, rng),
            ModelSpec::MaxLinear(s) => sample_max_linear(s, n, rng),
        }
    }

    pub fn truth(&self) -> GraphJson {
        match self {
            ModelSpec::Xscm(s) => GraphJson::from(&s.dag()),
            ModelSpec::TsXscm(s) => GraphJson::from(&s.ts_graph()),
            ModelSpec::Emn(s) => GraphJson::from(&s.graph()),
            ModelSpec::MaxLinear(s) => GraphJson::from(&s.dag()),
        }
    }

    /// Reads a model of family `kind`, either bare or wrapped as in `spec.json`.
    pub fn from_json(kind: ModelKind, text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("spec file: {e}")))?;
        let inner = value.get("spec").cloned().unwrap_or(value);
        let parse = |e: serde_json::Error| Error::Parse(format!("spec file: {e}"));
        Ok(match kind {
            ModelKind::Xscm | ModelKind::TsXscm => {
                let s: XscmSpec = serde_json::from_value(inner).map_err(parse)?;
                match (kind, s.tau()) {
                    (ModelKind::Xscm, 0) => ModelSpec::Xscm(s),
                    (ModelKind::TsXscm, t) if t > 0 => ModelSpec::TsXscm(s),
                    _ => return Err(Error::InvalidParameter(format!("spec tau = {} does not fit the model", s.tau()))),
                }
            }
            ModelKind::Emn => ModelSpec::Emn(serde_json::from_value(inner).map_err(parse)?),
            ModelKind::MaxLinear => ModelSpec::MaxLinear(serde_json::from_value(inner).map_err(parse)?),
        })
    }
}

#[derive(Serialize)]
struct SpecFile<'a> {
    #[serde(flatten)]
    model: &'a ModelSpec,
    seed: u64,
    graph: GraphJson,
}

pub fn cmd_simulate(args: &SimulateArgs, ctx: &RunContext) -> Result<()> {
    let mut rng = seeded_rng(args.seed);
    let (model, inputs) = match &args.spec_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            (ModelSpec::from_json(args.model, &text)?, vec![path.display().to_string()])
        }
        None => (ModelSpec::generate(args.model, args.p, args.phi, args.tau, args.contemporaneous, &mut rng)?, vec![]),
    };
    let data = model.sample(args.n, &mut rng)?;
    let mut out = Outputs::new();
    out.json("spec.json", &SpecFile { model: &model, seed: args.seed, graph: model.truth() })?;
    out.text("data.csv", to_csv_string(data.data()));
    let manifest = RunManifest::new(&Command::Simulate(args.clone()), Some(args.seed), inputs, &out.names(), ctx);
    out.commit(&args.out, &manifest)
}

#[derive(Debug, Serialize)]
struct RunReport {
    config: DiscoveryConfig,
    n: usize,
    p: usize,
    tests_run: usize,
    tests_skipped: usize,
    orientation_conflicts: usize,
    runtime_ms: u64,
    seed: Option<u64>,
}

impl RunReport {
    fn new(config: DiscoveryConfig, x: &StandardizedMatrix, stats: RunStats, runtime_ms: u64, seed: Option<u64>) -> Self {
        Self {
            config,
            n: x.n(),
            p: x.p(),
            tests_run: stats.tests_run,
            tests_skipped: stats.tests_skipped,
            orientation_conflicts: stats.orientation_conflicts,
            runtime_ms,
            seed,
        }
    }
}

fn learn_config(opts: &LearnOptions, tau: usize) -> DiscoveryConfig {
    DiscoveryConfig { q: opts.q, alpha: opts.alpha, tau, max_cond_size: opts.max_cond_size, centering: opts.centering }
}

fn graph_outputs(out: &mut Outputs, graph: &GraphJson) {
    out.text("graph.json", graph.to_json_string());
    out.text("graph.dot", to_dot(graph));
}

pub fn cmd_discover(args: &DiscoverArgs, ctx: &RunContext) -> Result<()> {
    let x = ingest_csv(&args.input, args.opts.header, !args.opts.no_standardize)?;
    let cfg = learn_config(&args.opts, args.tau);
    cfg.validate()?;
    let start = Instant::now();
    let (graph, stats) = if args.tau == 0 {
        let r = discover_dag(&x, &cfg)?;
        (GraphJson::from(&r.cpdag), r.stats)
    } else {
        let r = discover_ts(&x, &cfg)?;
        (GraphJson::from(&r.graph), r.stats)
    };
    let report = RunReport::new(cfg, &x, stats, ctx.elapsed_ms(start), args.opts.seed);
    let mut out = Outputs::new();
    graph_outputs(&mut out, &graph);
    out.json("report.json", &report)?;
    let inputs = vec![args.input.display().to_string()];
    let manifest = RunManifest::new(&Command::Discover(args.clone()), args.opts.seed, inputs, &out.names(), ctx);
    out.commit(&args.out, &manifest)
}

pub fn cmd_learn_mn(args: &LearnMnArgs, ctx: &RunContext) -> Result<()> {
    let x = ingest_csv(&args.input, args.opts.header, !args.opts.no_standardize)?;
    let cfg = learn_config(&args.opts, 0);
    cfg.validate()?;
    let start = Instant::now();
    let r = learn_emn(&x, &cfg)?;
    let report = RunReport::new(cfg, &x, r.stats, ctx.elapsed_ms(start), args.opts.seed);
    let mut out = Outputs::new();
    graph_outputs(&mut out, &GraphJson::from(&r.graph));
    out.json("report.json", &report)?;
    let inputs = vec![args.input.display().to_string()];
    let manifest = RunManifest::new(&Command::LearnMn(args.clone()), args.opts.seed, inputs, &out.names(), ctx);
    out.commit(&args.out, &manifest)
}

/// Edit distances reported by `evaluate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ned: f64,
    pub uned: f64,
    /// Only defined when the truth is a DAG and the estimate has no lags.
    pub ned_star: Option<f64>,
}

/// NED on ordered edges (undirected estimates count in both orientations),
/// UNED on adjacencies, NED* on the identifiable directions of the truth.
pub fn evaluate_graphs(truth: &GraphJson, estimate: &GraphJson) -> Result<Metrics> {
    if truth.p != estimate.p {
        return Err(Error::Dimension { expected: format!("p = {}", truth.p), got: format!("p = {}", estimate.p) });
    }
    let ned_value = ned(&truth.ordered_edges(), &estimate.ordered_edges());
    let uned_value = ned(&truth.unordered_edges(), &estimate.unordered_edges());
    let ned_star_value = match (truth.to_dag(), estimate.is_time_series()) {
        (Ok(dag), false) => Some(ned_star(&dag, &estimate.to_cpdag()?)),
        _ => None,
    };
    Ok(Metrics { ned: ned_value, uned: uned_value, ned_star: ned_star_value })
}

fn read_graph(path: &Path) -> Result<GraphJson> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    // spec.json from `simulate` carries the graph under "graph"
    if let Ok(serde_json::Value::Object(map)) = serde_json::from_str::<serde_json::Value>(&text) {
        if let Some(g) = map.get("graph") {
            return GraphJson::from_json_str(&g.to_string());
        }
    }
    GraphJson::from_json_str(&text)
}

pub fn cmd_evaluate(args: &EvaluateArgs, ctx: &RunContext) -> Result<Metrics> {
    let truth = read_graph(&args.truth)?;
    let estimate = read_graph(&args.estimate)?;
    let metrics = evaluate_graphs(&truth, &estimate)?;
    println!("{}", serde_json::to_string(&metrics)?);
    if let Some(dir) = &args.out {
        let mut out = Outputs::new();
        out.json("metrics.json", &metrics)?;
        let inputs = vec![args.truth.display().to_string(), args.estimate.display().to_string()];
        let manifest = RunManifest::new(&Command::Evaluate(args.clone()), None, inputs, &out.names(), ctx);
        out.commit(dir, &manifest)?;
    }
    Ok(metrics)
}

pub fn cmd_replay(args: &ReplayArgs, ctx: &RunContext) -> Result<()> {
    let manifest = RunManifest::read(&args.manifest)?;
    let mut command = manifest.config;
    if matches!(command, Command::Replay(_)) {
        return Err(Error::InvalidParameter("a replay manifest cannot be replayed".into()));
    }
    command.set_out(args.out.clone());
    execute(&command, ctx)
}

/// Runs one parsed command.
pub fn execute(command: &Command, ctx: &RunContext) -> Result<()> {
    match command {
        Command::Simulate(a) => cmd_simulate(a, ctx),
        Command::Discover(a) => cmd_discover(a, ctx),
        Command::LearnMn(a) => cmd_learn_mn(a, ctx),
        Command::Evaluate(a) => cmd_evaluate(a, ctx).map(|_| ()),
        Command::Experiment(a) => cmd_experiment(a, ctx).map(|_| ()),
        Command::Replay(a) => cmd_replay(a, ctx),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let ctx = RunContext { no_timing: cli.no_timing };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli.command, &ctx)),
            Err(e) => Err(Error::InvalidParameter(format!("thread pool: {e}"))),
        },
        None => execute(&cli.command, &ctx),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
