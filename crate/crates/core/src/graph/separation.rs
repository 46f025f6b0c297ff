use std::collections::{BTreeSet, VecDeque};

use super::{Dag, UndirectedGraph};

/// d-separation of `i` and `j` given `s`, by the reachability ("Bayes ball")
/// formulation: a trail is active iff every collider on it is in `s` or has a
/// descendant in `s`, and no other vertex on it is in `s`.
pub fn d_separated(g: &Dag, i: usize, j: usize, s: &[usize]) -> bool {
    let p = g.p();
    let in_s: Vec<bool> = (0..p).map(|v| s.contains(&v)).collect();

    // vertices with a descendant in s (including s itself) open colliders
    let mut opens_collider = in_s.clone();
    let mut queue: VecDeque<usize> = s.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for u in g.parents(v) {
            if !opens_collider[u] {
                opens_collider[u] = true;
                queue.push_back(u);
            }
        }
    }

    // state: (vertex, arrived along an edge pointing into it)
    let mut visited = BTreeSet::new();
    let mut queue = VecDeque::from([(i, false)]);
    while let Some((v, into)) = queue.pop_front() {
        if !visited.insert((v, into)) {
            continue;
        }
        if v == j {
            return false;
        }
        if !into {
            // arrived from a child (or start): v is a non-collider on this trail
            if !in_s[v] || v == i {
                for u in g.parents(v) {
                    queue.push_back((u, false));
                }
                for c in g.children(v) {
                    queue.push_back((c, true));
                }
            }
        } else {
            if !in_s[v] {
                for c in g.children(v) {
                    queue.push_back((c, true));
                }
            }
            if opens_collider[v] {
                for u in g.parents(v) {
                    queue.push_back((u, false));
                }
            }
        }
    }
    true
}

/// Vertex separation: removing `s` disconnects `i` from `j`.
pub fn u_separated(g: &UndirectedGraph, i: usize, j: usize, s: &[usize]) -> bool {
    let p = g.p();
    let mut blocked: Vec<bool> = (0..p).map(|v| s.contains(&v)).collect();
    blocked[i] = true;
    let mut queue = VecDeque::from([i]);
    while let Some(v) = queue.pop_front() {
        for u in g.neighbors(v) {
            if u == j {
                return false;
            }
            if !blocked[u] {
                blocked[u] = true;
                queue.push_back(u);
            }
        }
    }
    true
}
