use super::{unordered, Cpdag, Dag, UndirectedGraph};

/// Mutable partially directed graph used while orienting.
///
/// `adj` is symmetric; `arrow[a][b]` marks `a -> b`. An adjacent pair with no
/// arrow either way is undirected.
#[derive(Debug, Clone)]
pub struct Pdag {
    p: usize,
    adj: Vec<Vec<bool>>,
    arrow: Vec<Vec<bool>>,
    /// Pairs the rules are allowed to orient; all by default.
    orientable: Vec<Vec<bool>>,
}

impl Pdag {
    pub fn from_skeleton(skel: &UndirectedGraph) -> Self {
        let p = skel.p();
        let mut adj = vec![vec![false; p]; p];
        for &(a, b) in skel.edges() {
            adj[a][b] = true;
            adj[b][a] = true;
        }
        Self { p, adj, arrow: vec![vec![false; p]; p], orientable: vec![vec![true; p]; p] }
    }

    pub fn empty(p: usize) -> Self {
        Self {
            p,
            adj: vec![vec![false; p]; p],
            arrow: vec![vec![false; p]; p],
            orientable: vec![vec![true; p]; p],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn add_undirected(&mut self, a: usize, b: usize) {
        self.adj[a][b] = true;
        self.adj[b][a] = true;
        self.arrow[a][b] = false;
        self.arrow[b][a] = false;
    }

    pub fn add_directed(&mut self, a: usize, b: usize) {
        self.adj[a][b] = true;
        self.adj[b][a] = true;
        self.arrow[a][b] = true;
        self.arrow[b][a] = false;
    }

    /// Restricts the rules to pairs for which `allow(a, b)` holds.
    pub fn set_orientable(&mut self, allow: impl Fn(usize, usize) -> bool) {
        for a in 0..self.p {
            for b in 0..self.p {
                self.orientable[a][b] = allow(a, b);
            }
        }
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a][b]
    }

    pub fn is_directed(&self, a: usize, b: usize) -> bool {
        self.arrow[a][b]
    }

    pub fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.adj[a][b] && !self.arrow[a][b] && !self.arrow[b][a]
    }

    fn can_orient(&self, a: usize, b: usize) -> bool {
        self.is_undirected(a, b) && self.orientable[a][b]
    }

    /// Orients every unshielded collider `a -> c <- b` (a, b non-adjacent)
    /// for which `is_collider(a, c, b)` holds.
    pub fn orient_colliders(&mut self, is_collider: impl Fn(usize, usize, usize) -> bool) {
        let p = self.p;
        let mut marks = Vec::new();
        for c in 0..p {
            for a in 0..p {
                for b in a + 1..p {
                    if a != c && b != c && self.adj[a][c] && self.adj[b][c] && !self.adj[a][b] && is_collider(a, c, b) {
                        marks.push((a, c));
                        marks.push((b, c));
                    }
                }
            }
        }
        for (a, c) in marks {
            self.arrow[a][c] = true;
        }
    }

    /// Pairs carrying arrowheads at both ends after [`Self::orient_colliders`].
    /// They are reset to undirected and returned.
    pub fn resolve_conflicts(&mut self) -> Vec<(usize, usize)> {
        let mut conflicts = Vec::new();
        for a in 0..self.p {
            for b in a + 1..self.p {
                if self.arrow[a][b] && self.arrow[b][a] {
                    self.arrow[a][b] = false;
                    self.arrow[b][a] = false;
                    conflicts.push((a, b));
                }
            }
        }
        conflicts
    }

    fn rule1(&self, a: usize, b: usize) -> bool {
        (0..self.p).any(|c| self.arrow[c][a] && !self.adj[c][b] && c != b)
    }

    fn rule2(&self, a: usize, b: usize) -> bool {
        (0..self.p).any(|c| self.arrow[a][c] && self.arrow[c][b])
    }

    fn rule3(&self, a: usize, b: usize) -> bool {
        let cands: Vec<usize> = (0..self.p)
            .filter(|&c| self.is_undirected(a, c) && self.arrow[c][b])
            .collect();
        cands
            .iter()
            .enumerate()
            .any(|(k, &c)| cands[k + 1..].iter().any(|&d| !self.adj[c][d]))
    }

    fn rule4(&self, a: usize, b: usize) -> bool {
        // a - c -> d -> b with a adjacent to d and c, b non-adjacent
        (0..self.p).any(|c| {
            self.is_undirected(a, c)
                && c != b
                && !self.adj[c][b]
                && (0..self.p).any(|d| self.arrow[c][d] && self.arrow[d][b] && self.adj[a][d])
        })
    }

    /// Closes the graph under Meek rules 1–4, visiting pairs in index order.
    pub fn apply_meek_rules(&mut self) {
        loop {
            let mut changed = false;
            for a in 0..self.p {
                for b in 0..self.p {
                    if a == b || !self.can_orient(a, b) {
                        continue;
                    }
                    if self.rule1(a, b) || self.rule2(a, b) || self.rule3(a, b) || self.rule4(a, b) {
                        self.arrow[a][b] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    pub fn to_cpdag(&self) -> Cpdag {
        let mut directed = Vec::new();
        let mut undirected = Vec::new();
        for a in 0..self.p {
            for b in 0..self.p {
                if self.arrow[a][b] && !self.arrow[b][a] {
                    directed.push((a, b));
                } else if a < b && self.adj[a][b] && !self.arrow[a][b] && !self.arrow[b][a] {
                    undirected.push(unordered(a, b));
                }
            }
        }
        Cpdag::new(self.p, directed, undirected).expect("pdag state is consistent")
    }
}

/// CPDAG of the Markov equivalence class of `g`: skeleton, v-structures,
/// then Meek closure.
pub fn cpdag_of(g: &Dag) -> Cpdag {
    let mut pdag = Pdag::from_skeleton(&g.skeleton());
    pdag.orient_colliders(|a, c, b| g.has_edge(a, c) && g.has_edge(b, c));
    pdag.apply_meek_rules();
    pdag.to_cpdag()
}
