//! Directed graphs, (r,s)-robustness checks, and bundled topologies.
//!
//! An edge `(from, to)` means `from` can send to `to`, so the neighbor set
//! of a node is the set of senders it hears from. Self-loops are not stored
//! as edges; self-influence is expressed through weights. Robustness is
//! decided exhaustively over all pairs of nonempty disjoint node subsets
//! (cost grows like 3^n, so checks are capped by node count), with an
//! analytic shortcut for complete graphs.

use std::collections::BTreeSet;

use thiserror::Error;

/// Node-count cap for the exhaustive robustness check. Larger graphs are
/// refused unless a higher cap is passed explicitly.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 12;

/// Node count at or above which the exhaustive check runs on multiple
/// threads (when the `parallel` feature is enabled).
#[cfg(feature = "parallel")]
const PARALLEL_THRESHOLD: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("need at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("edge ({from}, {to}) out of range for {n} nodes")]
    EdgeOutOfRange { from: usize, to: usize, n: usize },
    #[error("self-loop on node {0}: self-influence is a weight, not an edge")]
    SelfLoop(usize),
    #[error("robustness parameters out of range: need 1 <= r, s < n (r={r}, s={s}, n={n})")]
    InvalidRobustness { r: usize, s: usize, n: usize },
    #[error("exhaustive check infeasible: n={n} exceeds cap {cap}")]
    SizeCapExceeded { n: usize, cap: usize },
    #[error("graph text line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A `(from, to, weight)` entry of a static edge-weight table.
pub type WeightedEdge = (usize, usize, f64);

/// Directed graph on nodes `0..n`. Immutable once built; all queries are
/// read-only and safe to share across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    in_adj: Vec<Vec<usize>>,
    out_adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl DirectedGraph {
    /// Builds a graph from `(from, to)` pairs. Duplicate edges collapse;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::TooFewNodes { min: 1, got: 0 });
        }
        let mut in_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut out_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (from, to) in edges {
            if from == to {
                return Err(GraphError::SelfLoop(from));
            }
            if from >= n || to >= n {
                return Err(GraphError::EdgeOutOfRange { from, to, n });
            }
            in_sets[to].insert(from);
            out_sets[from].insert(to);
        }
        let edge_count = out_sets.iter().map(BTreeSet::len).sum();
        Ok(Self {
            n,
            in_adj: in_sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            out_adj: out_sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            edge_count,
        })
    }

    /// Complete directed graph: every ordered pair `(j, i)` with `j != i`.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes { min: 2, got: n });
        }
        let edges = (0..n).flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| (j, i)));
        Self::from_edges(n, edges)
    }

    /// Chain topology on which the second protocol's error bound is attained
    /// with equality: node `n-1` has no incoming edge, node 0 listens to
    /// node 1 and keeps self-weight 1/2, and every intermediate node `i`
    /// listens to node 0 and node `i+1` with weight 1/2 each (no own value).
    ///
    /// Returns the graph together with the `(from, to, weight)` table; the
    /// table requires a weight policy that permits zero self-weight.
    pub fn worst_case_chain(n: usize) -> Result<(Self, Vec<WeightedEdge>), GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes { min: 2, got: n });
        }
        let mut weights = vec![(1, 0, 0.5)];
        for i in 1..n - 1 {
            weights.push((0, i, 0.5));
            weights.push((i + 1, i, 0.5));
        }
        let graph = Self::from_edges(n, weights.iter().map(|&(f, t, _)| (f, t)))?;
        Ok((graph, weights))
    }

    /// Seven-node topology used by the bundled scenarios: a deterministic
    /// greedy edge-minimization of the complete graph that stays
    /// (3,3)-robust. Removing any single remaining edge destroys
    /// (3,3)-robustness.
    pub fn seven_node() -> Self {
        let mut edges: BTreeSet<(usize, usize)> = Self::complete(7)
            .expect("K7 construction")
            .edges()
            .into_iter()
            .collect();
        let candidates: Vec<(usize, usize)> = edges.iter().copied().collect();
        for e in candidates {
            let trial: Vec<(usize, usize)> =
                edges.iter().copied().filter(|&x| x != e).collect();
            let g = Self::from_edges(7, trial).expect("trial graph");
            if g.is_rs_robust_exhaustive(3, 3, 7).expect("robustness check") {
                edges.remove(&e);
            }
        }
        Self::from_edges(7, edges).expect("minimized graph")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Nodes that can send to `i`, in ascending order.
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_adj[i]
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out_adj[i]
    }

    /// In-degree of node `i` (its neighbor count).
    pub fn in_degree(&self, i: usize) -> usize {
        self.in_adj[i].len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.out_adj[from].binary_search(&to).is_ok()
    }

    /// All edges as `(from, to)` pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (from, tos) in self.out_adj.iter().enumerate() {
            for &to in tos {
                out.push((from, to));
            }
        }
        out
    }

    pub fn is_complete(&self) -> bool {
        self.edge_count == self.n * (self.n - 1)
    }

    /// True iff some node reaches every other node along directed edges.
    pub fn has_spanning_tree(&self) -> bool {
        (0..self.n).any(|root| self.reachable_count(root) == self.n)
    }

    fn reachable_count(&self, root: usize) -> usize {
        let mut seen = vec![false; self.n];
        let mut stack = vec![root];
        seen[root] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.out_adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count
    }

    /// Decides (r,s)-robustness with the default size cap.
    ///
    /// For every pair of nonempty disjoint subsets `V1, V2`, at least one of
    /// the following must hold, where `X_i` is the set of nodes in `Vi` with
    /// at least `r` neighbors outside `Vi`: `X_1 = V1`, `X_2 = V2`, or
    /// `|X_1| + |X_2| >= s`. Complete graphs are decided analytically
    /// ((r,s)-robust iff `r <= ceil(n/2)`, any valid `s`); everything else
    /// is enumerated exhaustively up to the cap.
    pub fn is_rs_robust(&self, r: usize, s: usize) -> Result<bool, GraphError> {
        self.is_rs_robust_with_cap(r, s, DEFAULT_EXHAUSTIVE_CAP)
    }

    /// Same as [`is_rs_robust`](Self::is_rs_robust) with an explicit cap.
    pub fn is_rs_robust_with_cap(
        &self,
        r: usize,
        s: usize,
        cap: usize,
    ) -> Result<bool, GraphError> {
        self.validate_query(r, s)?;
        if self.is_complete() {
            return Ok(r <= self.n.div_ceil(2));
        }
        self.is_rs_robust_exhaustive(r, s, cap)
    }

    /// Exhaustive check without the complete-graph shortcut. Dispatches to
    /// the parallel enumeration for larger graphs when available.
    pub fn is_rs_robust_exhaustive(
        &self,
        r: usize,
        s: usize,
        cap: usize,
    ) -> Result<bool, GraphError> {
        self.validate_query(r, s)?;
        self.check_cap(cap)?;
        #[cfg(feature = "parallel")]
        if self.n >= PARALLEL_THRESHOLD {
            return self.is_rs_robust_exhaustive_par(r, s, cap);
        }
        self.is_rs_robust_exhaustive_seq(r, s, cap)
    }

    /// Single-threaded exhaustive enumeration.
    pub fn is_rs_robust_exhaustive_seq(
        &self,
        r: usize,
        s: usize,
        cap: usize,
    ) -> Result<bool, GraphError> {
        self.validate_query(r, s)?;
        self.check_cap(cap)?;
        let masks = self.in_masks();
        let full: u64 = (1u64 << self.n) - 1;
        for m1 in 1..=full {
            if !check_against_partners(&masks, r as u32, s, m1, full) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Multi-threaded exhaustive enumeration over the same subset pairs.
    #[cfg(feature = "parallel")]
    pub fn is_rs_robust_exhaustive_par(
        &self,
        r: usize,
        s: usize,
        cap: usize,
    ) -> Result<bool, GraphError> {
        use rayon::prelude::*;

        self.validate_query(r, s)?;
        self.check_cap(cap)?;
        let masks = self.in_masks();
        let full: u64 = (1u64 << self.n) - 1;
        let ok = (1..=full)
            .into_par_iter()
            .all(|m1| check_against_partners(&masks, r as u32, s, m1, full));
        Ok(ok)
    }

    /// Largest `r` such that the graph is (r,1)-robust; 0 when it is not
    /// even 1-robust (no directed spanning tree).
    pub fn max_r_robustness(&self) -> Result<usize, GraphError> {
        self.max_r_robustness_with_cap(DEFAULT_EXHAUSTIVE_CAP)
    }

    pub fn max_r_robustness_with_cap(&self, cap: usize) -> Result<usize, GraphError> {
        let mut best = 0;
        for r in 1..self.n {
            if self.is_rs_robust_with_cap(r, 1, cap)? {
                best = r;
            } else {
                break;
            }
        }
        Ok(best)
    }

    fn validate_query(&self, r: usize, s: usize) -> Result<(), GraphError> {
        if r < 1 || s < 1 || r >= self.n || s >= self.n {
            return Err(GraphError::InvalidRobustness { r, s, n: self.n });
        }
        Ok(())
    }

    fn check_cap(&self, cap: usize) -> Result<(), GraphError> {
        // Masks are u64, so 63 is a hard ceiling regardless of the cap.
        let cap = cap.min(63);
        if self.n > cap {
            return Err(GraphError::SizeCapExceeded { n: self.n, cap });
        }
        Ok(())
    }

    fn in_masks(&self) -> Vec<u64> {
        self.in_adj
            .iter()
            .map(|ns| ns.iter().fold(0u64, |m, &j| m | (1 << j)))
            .collect()
    }

    /// Parses the edge-list text format: a header `n=<count>` followed by
    /// one `from to` pair per line. Blank lines and `#` comments are
    /// ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut n: Option<usize> = None;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if n.is_none() {
                let Some(count) = trimmed.strip_prefix("n=") else {
                    return Err(GraphError::Parse {
                        line,
                        msg: format!("expected header `n=<count>`, got `{trimmed}`"),
                    });
                };
                n = Some(count.trim().parse().map_err(|_| GraphError::Parse {
                    line,
                    msg: format!("invalid node count `{count}`"),
                })?);
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("expected `from to`, got `{trimmed}`"),
                });
            };
            let from = a.parse().map_err(|_| GraphError::Parse {
                line,
                msg: format!("invalid node id `{a}`"),
            })?;
            let to = b.parse().map_err(|_| GraphError::Parse {
                line,
                msg: format!("invalid node id `{b}`"),
            })?;
            edges.push((from, to));
        }
        let Some(n) = n else {
            return Err(GraphError::Parse {
                line: 0,
                msg: "missing `n=<count>` header".into(),
            });
        };
        Self::from_edges(n, edges)
    }

    /// Serializes to the edge-list text format, edges in lexicographic order.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for (from, to) in self.edges() {
            out.push_str(&format!("{from} {to}\n"));
        }
        out
    }
}

/// Checks every nonempty `m2` disjoint from `m1` against the robustness
/// conditions; returns false as soon as a violating pair is found.
fn check_against_partners(masks: &[u64], r: u32, s: usize, m1: u64, full: u64) -> bool {
    let rest = full & !m1;
    let (all1, x1) = subset_profile(masks, r, m1);
    let mut m2 = rest;
    while m2 != 0 {
        if !(all1 || pair_partner_ok(masks, r, s, x1, m2)) {
            return false;
        }
        m2 = (m2 - 1) & rest;
    }
    true
}

fn pair_partner_ok(masks: &[u64], r: u32, s: usize, x1: usize, m2: u64) -> bool {
    let (all2, x2) = subset_profile(masks, r, m2);
    all2 || x1 + x2 >= s
}

/// For subset `m`: whether every member has >= r neighbors outside `m`, and
/// how many members do.
fn subset_profile(masks: &[u64], r: u32, m: u64) -> (bool, usize) {
    let mut qualified = 0usize;
    let mut all = true;
    let mut bits = m;
    while bits != 0 {
        let i = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        if (masks[i] & !m).count_ones() >= r {
            qualified += 1;
        } else {
            all = false;
        }
    }
    (all, qualified)
}
