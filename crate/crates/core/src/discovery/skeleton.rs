use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{unordered, UndirectedGraph};
use crate::ptcc::{SeparationOutcome, SeparationTest, SeparationTestResult};
use crate::{Error, Result};

/// Separating set recorded when an edge was removed.
#[derive(Debug, Clone, PartialEq)]
pub struct SepsetEntry {
    pub set: Vec<usize>,
    pub gamma: f64,
    pub result: Option<SeparationTestResult>,
}

/// Unordered pair → separating set. A pair has an entry iff its edge was removed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SepsetTable {
    entries: BTreeMap<(usize, usize), SepsetEntry>,
}

impl SepsetTable {
    pub fn get(&self, a: usize, b: usize) -> Option<&SepsetEntry> {
        self.entries.get(&unordered(a, b))
    }

    pub fn separating_set(&self, a: usize, b: usize) -> Option<&[usize]> {
        self.get(a, b).map(|e| e.set.as_slice())
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.entries.contains_key(&unordered(a, b))
    }

    pub fn insert(&mut self, a: usize, b: usize, entry: SepsetEntry) {
        self.entries.insert(unordered(a, b), entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &SepsetEntry)> {
        self.entries.iter()
    }
}

/// Counters reported with every run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub tests_run: usize,
    /// Tests that could not be evaluated (too few exceedances, singular
    /// conditioning block). The edge is kept.
    pub tests_skipped: usize,
    pub orientation_conflicts: usize,
}

#[derive(Debug, Clone)]
pub struct SkeletonOutcome {
    pub skeleton: UndirectedGraph,
    pub sepsets: SepsetTable,
    pub stats: RunStats,
}

/// Lexicographic `k`-subsets of `pool` (which is sorted).
pub(crate) fn combinations(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = pool.len();
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| pool[i]).collect());
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

fn is_estimation_failure(e: &Error) -> bool {
    matches!(e, Error::InsufficientExceedances { .. } | Error::SingularConditioningSet { .. })
}

struct PairResult {
    pair: (usize, usize),
    removal: Option<(Vec<usize>, SeparationOutcome)>,
    run: usize,
    skipped: usize,
}

fn test_pair(
    test: &dyn SeparationTest,
    graph: &UndirectedGraph,
    (a, b): (usize, usize),
    level: usize,
) -> Result<PairResult> {
    let pool_a: Vec<usize> = graph.neighbors(a).into_iter().filter(|&v| v != b).collect();
    let pool_b: Vec<usize> = graph.neighbors(b).into_iter().filter(|&v| v != a).collect();
    let mut seen = BTreeSet::new();
    let mut out = PairResult { pair: (a, b), removal: None, run: 0, skipped: 0 };
    for pool in [&pool_a, &pool_b] {
        for s in combinations(pool, level) {
            if !seen.insert(s.clone()) {
                continue;
            }
            match test.test(a, b, &s) {
                Ok(outcome) => {
                    out.run += 1;
                    if outcome.separated {
                        out.removal = Some((s, outcome));
                        return Ok(out);
                    }
                }
                Err(e) if is_estimation_failure(&e) => out.skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// PC-stable skeleton search starting from `initial`.
///
/// At each level the adjacency is frozen; every remaining pair is tested with
/// conditioning sets of that size drawn from either endpoint's frozen
/// neighbours, and removals are applied together once the level ends.
pub fn pc_stable(test: &dyn SeparationTest, initial: UndirectedGraph, max_cond_size: usize) -> Result<SkeletonOutcome> {
    if initial.p() != test.p() {
        return Err(Error::Dimension { expected: format!("{} vertices", test.p()), got: format!("{}", initial.p()) });
    }
    let mut graph = initial;
    let mut sepsets = SepsetTable::default();
    let mut stats = RunStats::default();
    for level in 0..=max_cond_size {
        let pairs: Vec<(usize, usize)> = graph
            .edges()
            .iter()
            .copied()
            .filter(|&(a, b)| graph.neighbors(a).len() > level || graph.neighbors(b).len() > level)
            .collect();
        if pairs.is_empty() {
            break;
        }
        let snapshot = &graph;
        let results: Vec<PairResult> = pairs
            .par_iter()
            .map(|&pair| test_pair(test, snapshot, pair, level))
            .collect::<Result<_>>()?;
        for r in results {
            stats.tests_run += r.run;
            stats.tests_skipped += r.skipped;
            if let Some((set, outcome)) = r.removal {
                graph.remove_edge(r.pair.0, r.pair.1);
                sepsets.insert(r.pair.0, r.pair.1, SepsetEntry { set, gamma: outcome.gamma, result: outcome.detail });
            }
        }
    }
    Ok(SkeletonOutcome { skeleton: graph, sepsets, stats })
}
