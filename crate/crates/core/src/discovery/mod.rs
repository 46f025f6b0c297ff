//! Constraint-based structure learning driven by a [`SeparationTest`].
//!
//! The skeleton phase is PC-stable ([`pc_stable`]); orientation applies the
//! collider rule to unshielded triples and closes under Meek's rules. Time
//! series are handled by lag expansion: the learner runs on the columns
//! `[X_t, X_{t−1}, …, X_{t−τ}]` and only pairs touching time `t` are tested.

mod skeleton;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::{topological_order_of, unordered, Cpdag, Pdag, TsGraph, UndirectedGraph};
use crate::ptcc::{NullCentering, PtccTester, SeparationTest};
use crate::tla::StandardizedMatrix;
use crate::{Error, Result};

pub use skeleton::{pc_stable, RunStats, SepsetEntry, SepsetTable, SkeletonOutcome};

/// Hyperparameters of a discovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    pub q: f64,
    pub alpha: f64,
    pub tau: usize,
    /// Largest conditioning set tried; `None` means `p − 2` over the tested variables.
    pub max_cond_size: Option<usize>,
    #[serde(default)]
    pub centering: NullCentering,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self { q: 0.99, alpha: 0.005, tau: 0, max_cond_size: None, centering: NullCentering::default() }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidParameter(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    fn cond_cap(&self, nodes: usize) -> usize {
        self.max_cond_size.unwrap_or(nodes.saturating_sub(2))
    }

    fn tester(&self, x: &StandardizedMatrix) -> Result<PtccTester> {
        self.validate()?;
        Ok(PtccTester::new(x, self.q, self.alpha)?.with_centering(self.centering))
    }
}

/// Learned CPDAG with the skeleton phase's by-products.
#[derive(Debug, Clone)]
pub struct DagDiscovery {
    pub cpdag: Cpdag,
    pub skeleton: UndirectedGraph,
    pub sepsets: SepsetTable,
    pub stats: RunStats,
}

/// Learned lagged graph. `skeleton` and `sepsets` refer to the lag-expanded
/// variables, where column `δ·p + i` is variable `i` at time `t − δ`.
#[derive(Debug, Clone)]
pub struct TsDiscovery {
    pub graph: TsGraph,
    pub skeleton: UndirectedGraph,
    pub sepsets: SepsetTable,
    pub stats: RunStats,
}

#[derive(Debug, Clone)]
pub struct NetworkDiscovery {
    pub graph: UndirectedGraph,
    pub stats: RunStats,
}

/// Skeleton search with the data-driven PTCC test.
pub fn learn_skeleton(x: &StandardizedMatrix, cfg: &DiscoveryConfig) -> Result<SkeletonOutcome> {
    let tester = cfg.tester(x)?;
    learn_skeleton_with(&tester, cfg)
}

pub fn learn_skeleton_with(test: &dyn SeparationTest, cfg: &DiscoveryConfig) -> Result<SkeletonOutcome> {
    let p = test.p();
    pc_stable(test, UndirectedGraph::complete(p), cfg.cond_cap(p))
}

/// Result of orienting a skeleton.
#[derive(Debug, Clone)]
pub struct Orientation {
    pub cpdag: Cpdag,
    pub conflicts: usize,
}

/// Colliders from separating sets, conflict reset, Meek closure.
pub fn orient(skeleton: &UndirectedGraph, sepsets: &SepsetTable) -> Orientation {
    let mut pdag = Pdag::from_skeleton(skeleton);
    pdag.orient_colliders(|a, c, b| sepsets.separating_set(a, b).is_some_and(|s| !s.contains(&c)));
    let mut conflicts = pdag.resolve_conflicts().len();
    pdag.apply_meek_rules();
    let (cpdag, broken) = break_directed_cycles(pdag.to_cpdag());
    conflicts += broken;
    Orientation { cpdag, conflicts }
}

/// Finite-sample orientations can close a directed cycle; its edges are made
/// undirected. Returns the number of edges demoted.
fn break_directed_cycles(g: Cpdag) -> (Cpdag, usize) {
    let p = g.p();
    let mut directed = g.directed().clone();
    let mut undirected = g.undirected().clone();
    let mut demoted = 0;
    while let Err(Error::Cyclic { cycle }) = topological_order_of(p, &directed) {
        let k = cycle.len();
        for idx in 0..k {
            let (a, b) = (cycle[idx], cycle[(idx + 1) % k]);
            let edge = if directed.contains(&(a, b)) { (a, b) } else { (b, a) };
            if directed.remove(&edge) {
                undirected.insert(unordered(a, b));
                demoted += 1;
            }
        }
    }
    (Cpdag::new(p, directed, undirected).expect("demotion keeps the graph consistent"), demoted)
}

/// Skeleton then orientation, with the PTCC test on `x`.
pub fn discover_dag(x: &StandardizedMatrix, cfg: &DiscoveryConfig) -> Result<DagDiscovery> {
    let tester = cfg.tester(x)?;
    discover_dag_with(&tester, cfg)
}

/// [`discover_dag`] with any separation test, e.g. an exact oracle.
pub fn discover_dag_with(test: &dyn SeparationTest, cfg: &DiscoveryConfig) -> Result<DagDiscovery> {
    let sk = learn_skeleton_with(test, cfg)?;
    let o = orient(&sk.skeleton, &sk.sepsets);
    let mut stats = sk.stats;
    stats.orientation_conflicts = o.conflicts;
    Ok(DagDiscovery { cpdag: o.cpdag, skeleton: sk.skeleton, sepsets: sk.sepsets, stats })
}

/// Undirected graph from the skeleton phase alone.
pub fn learn_emn(x: &StandardizedMatrix, cfg: &DiscoveryConfig) -> Result<NetworkDiscovery> {
    let tester = cfg.tester(x)?;
    learn_emn_with(&tester, cfg)
}

pub fn learn_emn_with(test: &dyn SeparationTest, cfg: &DiscoveryConfig) -> Result<NetworkDiscovery> {
    let sk = learn_skeleton_with(test, cfg)?;
    Ok(NetworkDiscovery { graph: sk.skeleton, stats: sk.stats })
}

/// `(T − τ) × p(τ + 1)` matrix whose column `δ·p + i` holds `X_{t−δ, i}`
/// for `t = τ, …, T − 1`.
pub fn lag_expand(x: &StandardizedMatrix, tau: usize) -> Result<StandardizedMatrix> {
    let (t_len, p) = (x.n(), x.p());
    if t_len <= tau {
        return Err(Error::InvalidParameter(format!("series of length {t_len} is too short for tau = {tau}")));
    }
    let rows = t_len - tau;
    let data = nalgebra::DMatrix::from_fn(rows, p * (tau + 1), |r, c| {
        let (lag, i) = (c / p, c % p);
        x.data()[(r + tau - lag, i)]
    });
    StandardizedMatrix::new(data, x.is_standardized())
}

/// Lagged graph from a `T × p` series.
pub fn discover_ts(x: &StandardizedMatrix, cfg: &DiscoveryConfig) -> Result<TsDiscovery> {
    cfg.validate()?;
    if x.n() <= 10 * (cfg.tau + 1) {
        return Err(Error::InvalidParameter(format!(
            "series length {} must exceed 10·(tau + 1) = {}",
            x.n(),
            10 * (cfg.tau + 1)
        )));
    }
    let expanded = lag_expand(x, cfg.tau)?;
    let tester = cfg.tester(&expanded)?;
    discover_ts_with(&tester, x.p(), cfg)
}

/// [`discover_ts`] with a test over the lag-expanded variables.
pub fn discover_ts_with(test: &dyn SeparationTest, p: usize, cfg: &DiscoveryConfig) -> Result<TsDiscovery> {
    let tau = cfg.tau;
    let nodes = p * (tau + 1);
    if test.p() != nodes {
        return Err(Error::Dimension { expected: format!("{nodes} lag-expanded variables"), got: format!("{}", test.p()) });
    }
    let lag_of = |v: usize| v / p;
    let initial = UndirectedGraph::new(
        nodes,
        (0..nodes).flat_map(|a| (a + 1..nodes).map(move |b| (a, b))).filter(|&(a, b)| lag_of(a) == 0 || lag_of(b) == 0),
    )?;
    let sk = pc_stable(test, initial, cfg.cond_cap(nodes))?;

    // lagged–lagged adjacencies by stationarity
    let shifted_adjacent = |a: usize, b: usize| -> bool {
        let (la, lb) = (lag_of(a), lag_of(b));
        let m = la.min(lb);
        sk.skeleton.adjacent(a - m * p, b - m * p)
    };
    let mut pdag = Pdag::empty(nodes);
    for a in 0..nodes {
        for b in a + 1..nodes {
            if !shifted_adjacent(a, b) {
                continue;
            }
            match lag_of(a).cmp(&lag_of(b)) {
                std::cmp::Ordering::Equal => pdag.add_undirected(a, b),
                std::cmp::Ordering::Greater => pdag.add_directed(a, b),
                std::cmp::Ordering::Less => pdag.add_directed(b, a),
            }
        }
    }
    pdag.set_orientable(|a, b| lag_of(a) == 0 && lag_of(b) == 0);
    let sepsets = &sk.sepsets;
    pdag.orient_colliders(|a, c, b| {
        lag_of(c) == 0 && sepsets.separating_set(a, b).is_some_and(|s| !s.contains(&c))
    });
    let mut conflicts = pdag.resolve_conflicts().len();
    pdag.apply_meek_rules();
    let full = pdag.to_cpdag();

    let mut edges = BTreeSet::new();
    for &(from, to) in full.directed() {
        if lag_of(to) == 0 && lag_of(from) > 0 {
            edges.insert((from % p, lag_of(from), to));
        }
    }
    let slice = Cpdag::new(
        p,
        full.directed().iter().copied().filter(|&(a, b)| lag_of(a) == 0 && lag_of(b) == 0),
        full.undirected().iter().copied().filter(|&(a, b)| lag_of(a) == 0 && lag_of(b) == 0),
    )?;
    let (slice, broken) = break_directed_cycles(slice);
    conflicts += broken;
    edges.extend(slice.directed().iter().map(|&(j, i)| (j, 0, i)));
    let graph = TsGraph::new(p, tau, edges, slice.undirected().iter().copied())?;
    let mut stats = sk.stats;
    stats.orientation_conflicts = conflicts;
    Ok(TsDiscovery { graph, skeleton: sk.skeleton, sepsets: sk.sepsets, stats })
}
