//! Graph types shared by ground truth and learner output.
//!
//! Vertices are `0..p`. A directed edge `(j, i)` means `j -> i`; undirected
//! edges are stored with the smaller index first. Lagged edges `(j, δ, i)`
//! mean `j` at time `t - δ` causes `i` at time `t`.

mod io;
mod metrics;
mod pdag;
mod separation;

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;

use crate::{Error, Result};

pub use io::{to_dot, GraphJson};
pub use metrics::{ned, ned_star, uned, undirected_closure};
pub use pdag::{cpdag_of, Pdag};
pub use separation::{d_separated, u_separated};

/// Normalizes an unordered pair.
pub fn unordered(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn check_vertex(p: usize, v: usize) -> Result<()> {
    if v >= p {
        return Err(Error::InvalidParameter(format!("vertex {v} out of range for p = {p}")));
    }
    Ok(())
}

/// Kahn's algorithm with smallest-index tie-break.
fn kahn(p: usize, edges: &BTreeSet<(usize, usize)>) -> std::result::Result<Vec<usize>, Vec<usize>> {
    let mut indegree = vec![0usize; p];
    let mut children = vec![Vec::new(); p];
    for &(from, to) in edges {
        indegree[to] += 1;
        children[from].push(to);
    }
    let mut ready: BTreeSet<usize> = (0..p).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(p);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == p {
        return Ok(order);
    }
    // every vertex left over has a parent among the left-overs; walk parents until one repeats
    let remaining: BTreeSet<usize> = (0..p).filter(|v| indegree[*v] > 0).collect();
    let start = *remaining.iter().next().expect("non-empty remainder");
    let mut path = vec![start];
    let mut seen = vec![usize::MAX; p];
    seen[start] = 0;
    let mut cur = start;
    loop {
        let parent = edges
            .iter()
            .find(|&&(f, t)| t == cur && remaining.contains(&f))
            .map(|&(f, _)| f)
            .expect("left-over vertex has a left-over parent");
        if seen[parent] != usize::MAX {
            let mut cycle: Vec<usize> = path[seen[parent]..].to_vec();
            cycle.reverse();
            return Err(cycle);
        }
        seen[parent] = path.len();
        path.push(parent);
        cur = parent;
    }
}

/// Topological order of an arbitrary directed edge set, or the cycle that prevents one.
pub fn topological_order_of(p: usize, edges: &BTreeSet<(usize, usize)>) -> Result<Vec<usize>> {
    kahn(p, edges).map_err(|cycle| Error::Cyclic { cycle })
}

/// A directed acyclic graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    p: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Dag {
    pub fn new(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let edges: BTreeSet<(usize, usize)> = edges.into_iter().collect();
        for &(a, b) in &edges {
            check_vertex(p, a)?;
            check_vertex(p, b)?;
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {a}")));
            }
        }
        topological_order_of(p, &edges)?;
        Ok(Self { p, edges })
    }

    /// Edges `j -> i` for every nonzero `B[i][j]`.
    pub fn from_weighted_adjacency(b: &DMatrix<f64>) -> Result<Self> {
        let p = b.nrows();
        let edges = (0..p)
            .flat_map(|i| (0..p).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && b[(i, j)] != 0.0)
            .map(|(i, j)| (j, i));
        if (0..p).any(|i| b[(i, i)] != 0.0) {
            return Err(Error::InvalidParameter("path matrix has a nonzero diagonal".into()));
        }
        Self::new(p, edges)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn parents(&self, v: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.1 == v).map(|e| e.0).collect()
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.0 == v).map(|e| e.1).collect()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Vertices reachable from `v` by directed paths, excluding `v`.
    pub fn descendants(&self, v: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            for c in self.children(u) {
                if out.insert(c) {
                    queue.push_back(c);
                }
            }
        }
        out
    }

    pub fn topological_order(&self) -> Result<Vec<usize>> {
        topological_order_of(self.p, &self.edges)
    }

    pub fn skeleton(&self) -> UndirectedGraph {
        UndirectedGraph {
            p: self.p,
            edges: self.edges.iter().map(|&(a, b)| unordered(a, b)).collect(),
        }
    }
}

/// A simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    p: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl UndirectedGraph {
    pub fn new(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            check_vertex(p, a)?;
            check_vertex(p, b)?;
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {a}")));
            }
            set.insert(unordered(a, b));
        }
        Ok(Self { p, edges: set })
    }

    pub fn empty(p: usize) -> Self {
        Self { p, edges: BTreeSet::new() }
    }

    pub fn complete(p: usize) -> Self {
        let edges = (0..p).flat_map(|a| (a + 1..p).map(move |b| (a, b))).collect();
        Self { p, edges }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&unordered(a, b))
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.p).filter(|&u| u != v && self.adjacent(u, v)).collect()
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) -> bool {
        self.edges.remove(&unordered(a, b))
    }

    /// Edges `{i, j}` for every nonzero off-diagonal `Q[i][j]`.
    pub fn from_precision(q: &DMatrix<f64>) -> Self {
        let p = q.nrows();
        let edges = (0..p)
            .flat_map(|a| (a + 1..p).map(move |b| (a, b)))
            .filter(|&(a, b)| q[(a, b)] != 0.0)
            .collect();
        Self { p, edges }
    }
}

/// A partially directed graph: the learner's output and the Markov
/// equivalence class representative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cpdag {
    p: usize,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
}

impl Cpdag {
    pub fn new(
        p: usize,
        directed: impl IntoIterator<Item = (usize, usize)>,
        undirected: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let directed: BTreeSet<(usize, usize)> = directed.into_iter().collect();
        let mut und = BTreeSet::new();
        for &(a, b) in &directed {
            check_vertex(p, a)?;
            check_vertex(p, b)?;
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {a}")));
            }
            if directed.contains(&(b, a)) {
                return Err(Error::InvalidParameter(format!("2-cycle between {a} and {b}")));
            }
        }
        for (a, b) in undirected {
            check_vertex(p, a)?;
            check_vertex(p, b)?;
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {a}")));
            }
            if directed.contains(&(a, b)) || directed.contains(&(b, a)) {
                return Err(Error::InvalidParameter(format!("pair ({a}, {b}) is both directed and undirected")));
            }
            und.insert(unordered(a, b));
        }
        Ok(Self { p, directed, undirected: und })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn directed(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub fn undirected(&self) -> &BTreeSet<(usize, usize)> {
        &self.undirected
    }

    pub fn skeleton(&self) -> UndirectedGraph {
        let edges = self
            .directed
            .iter()
            .map(|&(a, b)| unordered(a, b))
            .chain(self.undirected.iter().copied())
            .collect();
        UndirectedGraph { p: self.p, edges }
    }

    /// Ordered-pair edge set used by the edit distances: directed edges as
    /// they are, undirected edges in both orientations.
    pub fn as_edge_set(&self) -> BTreeSet<(usize, usize)> {
        let mut out = self.directed.clone();
        for &(a, b) in &self.undirected {
            out.insert((a, b));
            out.insert((b, a));
        }
        out
    }
}

impl From<&Dag> for Cpdag {
    fn from(d: &Dag) -> Self {
        Self { p: d.p, directed: d.edges.clone(), undirected: BTreeSet::new() }
    }
}

/// A lag-annotated graph of a stationary multivariate time series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TsGraph {
    p: usize,
    tau: usize,
    /// `(j, δ, i)`: `j` at `t - δ` causes `i` at `t`; `δ = 0` are contemporaneous.
    edges: BTreeSet<(usize, usize, usize)>,
    /// Contemporaneous adjacencies whose direction was not resolved.
    undirected: BTreeSet<(usize, usize)>,
}

impl TsGraph {
    pub fn new(
        p: usize,
        tau: usize,
        edges: impl IntoIterator<Item = (usize, usize, usize)>,
        undirected: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let edges: BTreeSet<(usize, usize, usize)> = edges.into_iter().collect();
        for &(j, lag, i) in &edges {
            check_vertex(p, i)?;
            check_vertex(p, j)?;
            if lag > tau {
                return Err(Error::InvalidParameter(format!("lag {lag} exceeds tau = {tau}")));
            }
            if lag == 0 && i == j {
                return Err(Error::InvalidParameter(format!("contemporaneous self-loop at {i}")));
            }
        }
        let contemporaneous: BTreeSet<(usize, usize)> =
            edges.iter().filter(|e| e.1 == 0).map(|&(j, _, i)| (j, i)).collect();
        topological_order_of(p, &contemporaneous)?;
        let undirected: BTreeSet<(usize, usize)> = undirected.into_iter().map(|(a, b)| unordered(a, b)).collect();
        for &(a, b) in &undirected {
            check_vertex(p, b)?;
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {a}")));
            }
        }
        Ok(Self { p, tau, edges, undirected })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize, usize)> {
        &self.edges
    }

    pub fn undirected(&self) -> &BTreeSet<(usize, usize)> {
        &self.undirected
    }

    /// Edges with `δ ≥ 1`.
    pub fn lagged(&self) -> BTreeSet<(usize, usize, usize)> {
        self.edges.iter().filter(|e| e.1 > 0).copied().collect()
    }

    /// Contemporaneous part as a partially directed graph.
    pub fn contemporaneous(&self) -> Cpdag {
        Cpdag {
            p: self.p,
            directed: self.edges.iter().filter(|e| e.1 == 0).map(|&(j, _, i)| (j, i)).collect(),
            undirected: self.undirected.clone(),
        }
    }
}
