//! Graph JSON interchange and DOT export.

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{Cpdag, Dag, TsGraph, UndirectedGraph};
use crate::{Error, Result};

/// `{"p": int, "directed": [[j,i],…], "undirected": [[i,j],…], "lagged": [[j,δ,i],…]}`.
///
/// Edge lists are sorted; vertices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub p: usize,
    #[serde(default)]
    pub directed: Vec<[usize; 2]>,
    #[serde(default)]
    pub undirected: Vec<[usize; 2]>,
    #[serde(default)]
    pub lagged: Vec<[usize; 3]>,
}

impl GraphJson {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("graph json serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(s).map_err(|e| Error::Parse(format!("graph json: {e}")))?;
        for v in g.directed.iter().flatten().chain(g.undirected.iter().flatten()) {
            if *v >= g.p {
                return Err(Error::Parse(format!("vertex {v} out of range for p = {}", g.p)));
            }
        }
        for e in &g.lagged {
            if e[0] >= g.p || e[2] >= g.p || e[1] == 0 {
                return Err(Error::Parse(format!("invalid lagged edge {e:?}")));
            }
        }
        Ok(g)
    }

    pub fn is_time_series(&self) -> bool {
        !self.lagged.is_empty()
    }

    /// Edges as `(j, δ, i)` triples; undirected pairs appear in both orientations at `δ = 0`.
    pub fn ordered_edges(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for &[j, i] in &self.directed {
            out.insert((j, 0, i));
        }
        for &[a, b] in &self.undirected {
            out.insert((a, 0, b));
            out.insert((b, 0, a));
        }
        for &[j, lag, i] in &self.lagged {
            out.insert((j, lag, i));
        }
        out
    }

    /// Adjacencies ignoring direction; lagged edges keep their time order.
    pub fn unordered_edges(&self) -> BTreeSet<(usize, usize, usize)> {
        self.ordered_edges()
            .into_iter()
            .map(|(j, lag, i)| if lag == 0 { (j.min(i), 0, j.max(i)) } else { (j, lag, i) })
            .collect()
    }

    pub fn to_dag(&self) -> Result<Dag> {
        if !self.undirected.is_empty() || !self.lagged.is_empty() {
            return Err(Error::InvalidParameter("graph is not a DAG".into()));
        }
        Dag::new(self.p, self.directed.iter().map(|e| (e[0], e[1])))
    }

    pub fn to_cpdag(&self) -> Result<Cpdag> {
        Cpdag::new(
            self.p,
            self.directed.iter().map(|e| (e[0], e[1])),
            self.undirected.iter().map(|e| (e[0], e[1])),
        )
    }

    pub fn to_undirected(&self) -> Result<UndirectedGraph> {
        UndirectedGraph::new(
            self.p,
            self.undirected.iter().chain(&self.directed).map(|e| (e[0], e[1])),
        )
    }

    pub fn to_ts_graph(&self) -> Result<TsGraph> {
        let tau = self.lagged.iter().map(|e| e[1]).max().unwrap_or(0);
        TsGraph::new(
            self.p,
            tau,
            self.directed
                .iter()
                .map(|e| (e[0], 0, e[1]))
                .chain(self.lagged.iter().map(|e| (e[0], e[1], e[2]))),
            self.undirected.iter().map(|e| (e[0], e[1])),
        )
    }
}

fn pairs(set: &BTreeSet<(usize, usize)>) -> Vec<[usize; 2]> {
    set.iter().map(|&(a, b)| [a, b]).collect()
}

impl From<&Dag> for GraphJson {
    fn from(g: &Dag) -> Self {
        Self { p: g.p(), directed: pairs(g.edges()), undirected: vec![], lagged: vec![] }
    }
}

impl From<&UndirectedGraph> for GraphJson {
    fn from(g: &UndirectedGraph) -> Self {
        Self { p: g.p(), directed: vec![], undirected: pairs(g.edges()), lagged: vec![] }
    }
}

impl From<&Cpdag> for GraphJson {
    fn from(g: &Cpdag) -> Self {
        Self { p: g.p(), directed: pairs(g.directed()), undirected: pairs(g.undirected()), lagged: vec![] }
    }
}

impl From<&TsGraph> for GraphJson {
    fn from(g: &TsGraph) -> Self {
        let mut directed = Vec::new();
        let mut lagged = Vec::new();
        for &(j, lag, i) in g.edges() {
            if lag == 0 {
                directed.push([j, i]);
            } else {
                lagged.push([j, lag, i]);
            }
        }
        Self { p: g.p(), directed, undirected: pairs(g.undirected()), lagged }
    }
}

/// DOT rendering: directed `j -> i`, undirected `i -> j [dir=none]`,
/// lagged edges red with a `lag=δ` label.
pub fn to_dot(g: &GraphJson) -> String {
    let mut out = String::from("digraph G {\n");
    for v in 0..g.p {
        let _ = writeln!(out, "  {v} [label=\"v{}\"];", v + 1);
    }
    for &[j, i] in &g.directed {
        let _ = writeln!(out, "  {j} -> {i};");
    }
    for &[a, b] in &g.undirected {
        let _ = writeln!(out, "  {a} -> {b} [dir=none];");
    }
    for &[j, lag, i] in &g.lagged {
        let _ = writeln!(out, "  {j} -> {i} [color=red, label=\"lag={lag}\"];");
    }
    out.push_str("}\n");
    out
}
