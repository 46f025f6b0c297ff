//! Normalized edit distances between true and estimated edge sets.

use std::collections::BTreeSet;

use super::{cpdag_of, unordered, Cpdag, Dag};

/// `(|E \ Ê| + |Ê \ E|) / (|E| + |Ê|)`, with two empty sets at distance 0.
pub fn ned<T: Ord>(truth: &BTreeSet<T>, estimate: &BTreeSet<T>) -> f64 {
    let total = truth.len() + estimate.len();
    if total == 0 {
        return 0.0;
    }
    let mismatched = truth.symmetric_difference(estimate).count();
    mismatched as f64 / total as f64
}

/// Direction-free version of a directed edge set.
pub fn undirected_closure(edges: &BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    edges.iter().map(|&(a, b)| unordered(a, b)).collect()
}

/// NED on the undirected closures of both edge sets.
///
/// Keeping one unordered pair per adjacency gives the same ratio as keeping
/// both orientations, since both numerator and denominator double.
pub fn uned(truth: &BTreeSet<(usize, usize)>, estimate: &BTreeSet<(usize, usize)>) -> f64 {
    ned(&undirected_closure(truth), &undirected_closure(estimate))
}

/// NED restricted to directions identifiable from separation statements:
/// the directed part of the true CPDAG against the directed part of the estimate.
pub fn ned_star(truth: &Dag, estimate: &Cpdag) -> f64 {
    ned(cpdag_of(truth).directed(), estimate.directed())
}
