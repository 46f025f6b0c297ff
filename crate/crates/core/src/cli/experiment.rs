use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_graphs, format_f64, Command, ModelKind, ModelSpec, Outputs, RunContext, RunManifest};
use crate::discovery::{discover_dag, discover_ts, learn_emn, DiscoveryConfig};
use crate::graph::{ned, GraphJson};
use crate::models::{mix_seed, seeded_rng};
use crate::ptcc::NullCentering;
use crate::{Error, Result};

/// Model family and learner of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Cross-sectional structural model, CPDAG learner.
    Dag,
    /// Extremal network, undirected learner.
    Emn,
    /// Lagged structural model, time-series learner.
    Ts,
    /// Max-linear model, CPDAG learner.
    MaxLinear,
}

impl Scenario {
    fn model(self) -> ModelKind {
        match self {
            Scenario::Dag => ModelKind::Xscm,
            Scenario::Emn => ModelKind::Emn,
            Scenario::Ts => ModelKind::TsXscm,
            Scenario::MaxLinear => ModelKind::MaxLinear,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Scenario::Dag => "dag",
            Scenario::Emn => "emn",
            Scenario::Ts => "ts",
            Scenario::MaxLinear => "max-linear",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub p: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.3")]
    pub phi: Vec<f64>,
    /// Sample sizes (series lengths for ts).
    #[arg(long, value_delimiter = ',', default_value = "5000")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    #[arg(long, env = "EXTAIL_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.99)]
    pub q: f64,
    #[arg(long, default_value_t = 0.005)]
    pub alpha: f64,
    /// Sweep over these thresholds instead of `--q`.
    #[arg(long, value_delimiter = ',')]
    pub q_grid: Option<Vec<f64>>,
    /// Sweep over these levels instead of `--alpha`.
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub tau: usize,
    #[arg(long)]
    pub contemporaneous: bool,
    #[arg(long)]
    pub max_cond_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = NullCentering::CyclicShift)]
    pub centering: NullCentering,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

/// One line of `table.csv`.
///
/// For `ts` the `ned` column compares lagged edges only; `ned_star` is empty
/// whenever it is not defined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub scenario: Scenario,
    pub p: usize,
    pub phi: f64,
    pub n: usize,
    pub q: f64,
    pub alpha: f64,
    pub replicate: usize,
    pub seed: u64,
    /// `ok`, or the error that stopped this replicate.
    pub status: String,
    pub ned: Option<f64>,
    pub uned: Option<f64>,
    pub ned_star: Option<f64>,
    pub runtime_ms: u64,
}

const COLUMNS: [&str; 13] =
    ["scenario", "p", "phi", "n", "q", "alpha", "replicate", "seed", "status", "ned", "uned", "ned_star", "runtime_ms"];

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

fn table_csv(rows: &[ExperimentRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).map_err(|e| Error::Invariant(format!("csv: {e}")))?;
    for r in rows {
        w.write_record([
            r.scenario.name().to_string(),
            r.p.to_string(),
            r.phi.to_string(),
            r.n.to_string(),
            r.q.to_string(),
            r.alpha.to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            r.status.clone(),
            opt(r.ned),
            opt(r.uned),
            opt(r.ned_star),
            r.runtime_ms.to_string(),
        ])
        .map_err(|e| Error::Invariant(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invariant(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Invariant(e.to_string()))
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Medians per `(p, phi, n, q, alpha)` cell over the successful replicates.
fn summary_csv(rows: &[ExperimentRow]) -> Result<String> {
    let mut cells: BTreeMap<(usize, usize, usize, usize, usize), Vec<&ExperimentRow>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in rows {
        let key = (r.p, order_of(&mut order, r.phi), r.n, order_of(&mut order, r.q), order_of(&mut order, r.alpha));
        cells.entry(key).or_default().push(r);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Invariant(format!("csv: {e}"));
    w.write_record(["scenario", "p", "phi", "n", "q", "alpha", "replicates", "failed", "ned", "uned", "ned_star"])
        .map_err(err)?;
    for group in cells.values() {
        let first = group[0];
        let ok: Vec<&&ExperimentRow> = group.iter().filter(|r| r.status == "ok").collect();
        let col = |f: fn(&ExperimentRow) -> Option<f64>| opt(median(ok.iter().filter_map(|r| f(r)).collect()));
        w.write_record([
            first.scenario.name().to_string(),
            first.p.to_string(),
            first.phi.to_string(),
            first.n.to_string(),
            first.q.to_string(),
            first.alpha.to_string(),
            group.len().to_string(),
            (group.len() - ok.len()).to_string(),
            col(|r| r.ned),
            col(|r| r.uned),
            col(|r| r.ned_star),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invariant(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Invariant(e.to_string()))
}

/// Position of `v` in first-seen order, so float keys sort as given.
fn order_of(seen: &mut Vec<u64>, v: f64) -> usize {
    let bits = v.to_bits();
    match seen.iter().position(|&b| b == bits) {
        Some(i) => i,
        None => {
            seen.push(bits);
            seen.len() - 1
        }
    }
}

struct Cell {
    p: usize,
    phi: f64,
    n: usize,
    replicate: usize,
    seed: u64,
}

type Scored = (Option<f64>, Option<f64>, Option<f64>);

fn score(scenario: Scenario, truth: &GraphJson, estimate: &GraphJson) -> Result<Scored> {
    let m = evaluate_graphs(truth, estimate)?;
    Ok(match scenario {
        Scenario::Ts => {
            let lagged = |g: &GraphJson| g.to_ts_graph().map(|t| t.lagged());
            (Some(ned(&lagged(truth)?, &lagged(estimate)?)), Some(m.uned), None)
        }
        Scenario::Emn => (Some(m.ned), Some(m.uned), None),
        Scenario::Dag | Scenario::MaxLinear => (Some(m.ned), Some(m.uned), m.ned_star),
    })
}

fn learn(scenario: Scenario, x: &crate::tla::StandardizedMatrix, cfg: &DiscoveryConfig) -> Result<GraphJson> {
    Ok(match scenario {
        Scenario::Dag | Scenario::MaxLinear => GraphJson::from(&discover_dag(x, cfg)?.cpdag),
        Scenario::Emn => GraphJson::from(&learn_emn(x, cfg)?.graph),
        Scenario::Ts => GraphJson::from(&discover_ts(x, cfg)?.graph),
    })
}

fn run_cell(args: &ExperimentArgs, cell: &Cell, grid: &[(f64, f64)], ctx: &RunContext) -> Vec<ExperimentRow> {
    let row = |q: f64, alpha: f64, status: String, scored: Scored, runtime_ms: u64| ExperimentRow {
        scenario: args.scenario,
        p: cell.p,
        phi: cell.phi,
        n: cell.n,
        q,
        alpha,
        replicate: cell.replicate,
        seed: cell.seed,
        status,
        ned: scored.0,
        uned: scored.1,
        ned_star: scored.2,
        runtime_ms,
    };
    let mut rng = seeded_rng(cell.seed);
    let tau = if args.scenario == Scenario::Ts { args.tau } else { 0 };
    let drawn = ModelSpec::generate(args.scenario.model(), cell.p, cell.phi, tau, args.contemporaneous, &mut rng)
        .and_then(|m| m.sample(cell.n, &mut rng).map(|x| (m, x)));
    let (model, x) = match drawn {
        Ok(v) => v,
        Err(e) => return grid.iter().map(|&(q, a)| row(q, a, format!("error: {e}"), (None, None, None), 0)).collect(),
    };
    let truth = model.truth();
    grid.iter()
        .map(|&(q, alpha)| {
            let cfg = DiscoveryConfig { q, alpha, tau, max_cond_size: args.max_cond_size, centering: args.centering };
            let start = Instant::now();
            let result = learn(args.scenario, &x, &cfg).and_then(|g| score(args.scenario, &truth, &g));
            let ms = ctx.elapsed_ms(start);
            match result {
                Ok(s) => row(q, alpha, "ok".into(), s, ms),
                Err(e) => row(q, alpha, format!("error: {e}"), (None, None, None), ms),
            }
        })
        .collect()
}

/// Replicated simulate → learn → evaluate over the product of the grids.
///
/// Replicate `r` uses seed `mix_seed(seed, r)` in every cell, so cells are
/// paired. A failing replicate is recorded in `status` and the sweep goes on.
/// Writes `table.csv` (one row per replicate and setting), `summary.csv`
/// (medians per setting) and `manifest.json`.
pub fn cmd_experiment(args: &ExperimentArgs, ctx: &RunContext) -> Result<Vec<ExperimentRow>> {
    let qs = args.q_grid.clone().unwrap_or_else(|| vec![args.q]);
    let alphas = args.alpha_grid.clone().unwrap_or_else(|| vec![args.alpha]);
    if args.p.is_empty() || args.phi.is_empty() || args.n.is_empty() || qs.is_empty() || alphas.is_empty() {
        return Err(Error::InvalidParameter("every grid needs at least one value".into()));
    }
    if args.replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be positive".into()));
    }
    let mut grid = Vec::new();
    for &q in &qs {
        for &alpha in &alphas {
            let cfg = DiscoveryConfig { q, alpha, tau: 0, max_cond_size: args.max_cond_size, centering: args.centering };
            cfg.validate()?;
            grid.push((q, alpha));
        }
    }
    let mut cells = Vec::new();
    for &p in &args.p {
        for &phi in &args.phi {
            for &n in &args.n {
                for r in 0..args.replicates {
                    cells.push(Cell { p, phi, n, replicate: r, seed: mix_seed(args.seed, r as u64) });
                }
            }
        }
    }
    let rows: Vec<ExperimentRow> = cells.par_iter().flat_map_iter(|c| run_cell(args, c, &grid, ctx)).collect();
    let mut out = Outputs::new();
    out.text("table.csv", table_csv(&rows)?);
    out.text("summary.csv", summary_csv(&rows)?);
    let manifest = RunManifest::new(&Command::Experiment(args.clone()), Some(args.seed), vec![], &out.names(), ctx);
    out.commit(&args.out, &manifest)?;
    Ok(rows)
}
