//! Forward local push for personalized PageRank.
//!
//! Starting from unit residual mass at the source, any node `u` whose
//! residual-to-degree ratio exceeds `r_max` is pushed: an `alpha` fraction of
//! its residual is settled into the estimate and the rest is spread over its
//! neighbors in proportion to edge weight. After every push the pair
//! `(p, r)` satisfies
//!
//! ```text
//! pi_s[t] = p[t] + sum_v r[v] * pi_v[t]    for every t.
//! ```
//!
//! Nodes are processed from a FIFO queue, so results are bit-reproducible.

use std::collections::VecDeque;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{check_open_unit, check_positive, invalid, Result};
use crate::graph::{Graph, NodeId};

/// Sparse map from node to value. Never stores an exact zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: FxHashMap<NodeId, f64>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unit(v: NodeId) -> Self {
        let mut out = Self::new();
        out.set(v, 1.0);
        out
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (NodeId, f64)>) -> Self {
        let mut out = Self::new();
        for (v, x) in pairs {
            out.add(v, x);
        }
        out
    }

    #[inline]
    pub fn get(&self, v: NodeId) -> f64 {
        self.entries.get(&v).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, v: NodeId, x: f64) {
        if x == 0.0 {
            self.entries.remove(&v);
        } else {
            self.entries.insert(v, x);
        }
    }

    /// Adds `x` to entry `v` and returns the new value.
    #[inline]
    pub fn add(&mut self, v: NodeId, x: f64) -> f64 {
        let slot = self.entries.entry(v).or_insert(0.0);
        *slot += x;
        let value = *slot;
        if value == 0.0 {
            self.entries.remove(&v);
        }
        value
    }

    /// Removes entry `v`, returning its previous value (0 when absent).
    #[inline]
    pub fn take(&mut self, v: NodeId) -> f64 {
        self.entries.remove(&v).unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.entries.iter().map(|(&v, &x)| (v, x))
    }

    /// Entries ordered by node id.
    pub fn sorted(&self) -> Vec<(NodeId, f64)> {
        let mut out: Vec<_> = self.iter().collect();
        out.sort_unstable_by_key(|&(v, _)| v);
        out
    }

    pub fn sum(&self) -> f64 {
        self.sorted().iter().map(|&(_, x)| x).sum()
    }

    pub fn max_value(&self) -> f64 {
        self.entries.values().copied().fold(0.0, f64::max)
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (v, x) in self.iter() {
            out[v.index()] = x;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PushResult {
    /// Settled estimates `p`.
    pub p: SparseVector,
    /// Unpushed residual mass `r`.
    pub r: SparseVector,
    pub push_count: u64,
    /// Sum of (weighted) degrees of pushed nodes; bounded by `1 / (alpha r_max)`.
    pub degree_work: f64,
    /// Number of adjacency entries scanned across all pushes.
    pub edge_work: u64,
    pub alpha: f64,
    pub r_max: f64,
}

impl PushResult {
    pub fn work_bound(&self) -> f64 {
        1.0 / (self.alpha * self.r_max)
    }

    pub fn within_work_bound(&self) -> bool {
        self.degree_work <= self.work_bound() * (1.0 + 1e-9)
    }

    pub fn max_residual_ratio(&self, g: &Graph) -> f64 {
        self.r.iter().map(|(v, x)| x / g.degree_of(v)).fold(0.0, f64::max)
    }
}

/// State handed to a push observer right after each push.
#[derive(Debug)]
pub struct PushProgress<'a> {
    pub pushed: NodeId,
    pub p: &'a SparseVector,
    pub r: &'a SparseVector,
    pub push_count: u64,
    pub degree_work: f64,
}

pub fn approximate_pagerank(g: &Graph, alpha: f64, s: NodeId, r_max: f64) -> Result<PushResult> {
    approximate_pagerank_observed(g, alpha, s, r_max, |_| {})
}

/// [`approximate_pagerank`] with a callback invoked after every push.
pub fn approximate_pagerank_observed<F>(g: &Graph, alpha: f64, s: NodeId, r_max: f64, observer: F) -> Result<PushResult>
where
    F: FnMut(&PushProgress<'_>),
{
    check_open_unit("alpha", alpha)?;
    check_positive("r_max", r_max)?;
    g.check_walkable(s)?;
    Ok(push_loop(g, alpha, r_max, SparseVector::unit(s), observer))
}

pub fn push_from_distribution(g: &Graph, alpha: f64, sigma: &SparseVector, r_max: f64) -> Result<PushResult> {
    push_from_distribution_observed(g, alpha, sigma, r_max, |_| {})
}

/// Push with the residual initialised to `sigma` instead of a unit vector.
pub fn push_from_distribution_observed<F>(
    g: &Graph,
    alpha: f64,
    sigma: &SparseVector,
    r_max: f64,
    observer: F,
) -> Result<PushResult>
where
    F: FnMut(&PushProgress<'_>),
{
    check_open_unit("alpha", alpha)?;
    check_positive("r_max", r_max)?;
    let mut total = 0.0;
    for (v, x) in sigma.sorted() {
        if !(x > 0.0 && x.is_finite()) {
            return Err(invalid(format!("source distribution entry at node {v} is {x}")));
        }
        g.check_walkable(v)?;
        total += x;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("source distribution sums to {total}, expected 1")));
    }
    Ok(push_loop(g, alpha, r_max, sigma.clone(), observer))
}

fn push_loop<F>(g: &Graph, alpha: f64, r_max: f64, mut r: SparseVector, mut observer: F) -> PushResult
where
    F: FnMut(&PushProgress<'_>),
{
    let mut p = SparseVector::new();
    let mut queue = VecDeque::new();
    let mut queued = FxHashSet::default();
    for (v, x) in r.sorted() {
        if x / g.degree_of(v) > r_max {
            queue.push_back(v);
            queued.insert(v);
        }
    }

    let mut push_count = 0u64;
    let mut degree_work = 0.0;
    let mut edge_work = 0u64;
    while let Some(u) = queue.pop_front() {
        queued.remove(&u);
        let du = g.degree_of(u);
        // Zero first so a self-loop's share lands back on u.
        let ru = r.take(u);
        debug_assert!(ru / du > r_max);
        p.add(u, alpha * ru);
        let spread = (1.0 - alpha) * ru / du;
        for (v, w) in g.neighbors(u) {
            let rv = r.add(v, spread * w);
            if rv / g.degree_of(v) > r_max && queued.insert(v) {
                queue.push_back(v);
            }
        }
        push_count += 1;
        degree_work += du;
        edge_work += g.neighbor_count(u) as u64;
        observer(&PushProgress { pushed: u, p: &p, r: &r, push_count, degree_work });
    }

    let result = PushResult { p, r, push_count, degree_work, edge_work, alpha, r_max };
    debug_assert!(result.within_work_bound(), "push work {} exceeds {}", degree_work, result.work_bound());
    result
}
