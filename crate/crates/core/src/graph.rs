//! Immutable undirected weighted graphs in compressed adjacency form.
//!
//! Node labels from edge-list files are remapped to dense [`NodeId`]s in
//! first-appearance order. Each undirected edge `{u, v}` with `u != v` is
//! stored twice (once per endpoint); a self-loop is stored once and
//! contributes its weight once to the degree of its node.

use std::fmt;
use std::io::BufRead;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::walk::RandomStream;

/// Dense node index in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index exceeds u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    weights: Vec<f64>,
    /// Running sum of `weights` within each node's adjacency slice.
    cumulative: Vec<f64>,
    degrees: Vec<f64>,
    edge_count: usize,
    total_weight: f64,
    unit_weights: bool,
    labels: Vec<String>,
    label_index: FxHashMap<String, NodeId>,
}

/// Accumulates edges, merging duplicates, before freezing into a [`Graph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    labels: Vec<String>,
    label_index: FxHashMap<String, NodeId>,
    edges: FxHashMap<(u32, u32), f64>,
    edge_order: Vec<(u32, u32)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `label`, allocating the next dense id on first sight.
    pub fn node(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.label_index.get(label) {
            return id;
        }
        let id = NodeId::from(self.labels.len());
        self.labels.push(label.to_owned());
        self.label_index.insert(label.to_owned(), id);
        id
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId, weight: f64) -> Result<()> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("edge weight must be positive and finite, got {weight}")));
        }
        let n = self.labels.len();
        for x in [u, v] {
            if x.index() >= n {
                return Err(Error::NodeOutOfRange { node: x.index(), n });
            }
        }
        let key = if u <= v { (u.0, v.0) } else { (v.0, u.0) };
        match self.edges.get_mut(&key) {
            Some(w) => *w += weight,
            None => {
                self.edges.insert(key, weight);
                self.edge_order.push(key);
            }
        }
        Ok(())
    }

    pub fn add_labeled_edge(&mut self, u: &str, v: &str, weight: f64) -> Result<()> {
        let u = self.node(u);
        let v = self.node(v);
        self.add_edge(u, v, weight)
    }

    pub fn build(self) -> Graph {
        let n = self.labels.len();
        let mut adjacency: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n];
        let mut total_weight = 0.0;
        let mut unit_weights = true;
        for key in &self.edge_order {
            let w = self.edges[key];
            let (u, v) = (NodeId(key.0), NodeId(key.1));
            total_weight += w;
            unit_weights &= w == 1.0;
            adjacency[u.index()].push((v, w));
            if u != v {
                adjacency[v.index()].push((u, w));
            }
        }

        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut cumulative = Vec::new();
        let mut degrees = Vec::with_capacity(n);
        offsets.push(0);
        for mut list in adjacency {
            list.sort_by_key(|&(v, _)| v);
            let mut acc = 0.0;
            for (v, w) in list {
                acc += w;
                targets.push(v);
                weights.push(w);
                cumulative.push(acc);
            }
            degrees.push(acc);
            offsets.push(targets.len());
        }

        Graph {
            offsets,
            targets,
            weights,
            cumulative,
            degrees,
            edge_count: self.edge_order.len(),
            total_weight,
            unit_weights,
            labels: self.labels,
            label_index: self.label_index,
        }
    }
}

impl Graph {
    /// Builds a graph over nodes `0..n` labelled by their index.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Graph> {
        let mut b = GraphBuilder::new();
        for i in 0..n {
            b.node(&i.to_string());
        }
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::NodeOutOfRange { node: u.max(v), n });
            }
            b.add_edge(NodeId::from(u), NodeId::from(v), w)?;
        }
        Ok(b.build())
    }

    pub fn from_unweighted_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let weighted: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Graph::from_edges(n, &weighted)
    }

    /// Parses a whitespace-separated edge list.
    ///
    /// `#` starts a comment, blank lines are skipped. Each remaining line is
    /// `u v` or `u v w`. When `weighted` is false a third token is ignored and
    /// every edge has weight 1.
    pub fn load_edge_list<R: BufRead>(source: R, weighted: bool) -> Result<Graph> {
        let mut b = GraphBuilder::new();
        for (i, line) in source.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let content = match line.find('#') {
                Some(pos) => &line[..pos],
                None => &line[..],
            };
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            if tokens.len() != 2 && tokens.len() != 3 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 2 or 3 tokens, found {}", tokens.len()),
                });
            }
            let weight = match tokens.get(2) {
                Some(tok) if weighted => {
                    let w: f64 = tok.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("weight {tok:?} is not a number"),
                    })?;
                    if !(w > 0.0 && w.is_finite()) {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("weight must be positive and finite, got {tok}"),
                        });
                    }
                    w
                }
                _ => 1.0,
            };
            b.add_labeled_edge(tokens[0], tokens[1], weight)?;
        }
        Ok(b.build())
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }

    /// Number of distinct undirected edges (self-loops included, duplicates merged).
    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sum of edge weights, each undirected edge counted once. Equals
    /// `edge_count` for unweighted graphs without duplicate edges.
    #[inline]
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// True when every stored edge weight is exactly 1.
    #[inline]
    pub fn has_unit_weights(&self) -> bool {
        self.unit_weights
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v.index() < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: v.index(), n: self.node_count() })
        }
    }

    /// Fails unless `v` is in range and has positive degree.
    pub fn check_walkable(&self, v: NodeId) -> Result<()> {
        self.check_node(v)?;
        if self.degrees[v.index()] > 0.0 {
            Ok(())
        } else {
            Err(Error::IsolatedNode(v.index()))
        }
    }

    pub fn degree(&self, v: NodeId) -> Result<f64> {
        self.check_node(v)?;
        Ok(self.degrees[v.index()])
    }

    #[inline]
    pub(crate) fn degree_of(&self, v: NodeId) -> f64 {
        self.degrees[v.index()]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn min_positive_degree(&self) -> Option<f64> {
        self.degrees.iter().copied().filter(|&d| d > 0.0).reduce(f64::min)
    }

    /// `(neighbor, weight)` pairs of `v`, sorted by neighbor id.
    #[inline]
    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let range = self.offsets[v.index()]..self.offsets[v.index() + 1];
        self.targets[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    pub fn neighbor_count(&self, v: NodeId) -> usize {
        self.offsets[v.index() + 1] - self.offsets[v.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId::from)
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v.index()]
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.label_index.get(label).copied()
    }

    /// Moves one random-walk step from `v`: neighbor `u` is chosen with
    /// probability `w(v, u) / d_v`.
    pub fn step(&self, v: NodeId, rng: &mut RandomStream) -> Result<NodeId> {
        self.check_walkable(v)?;
        Ok(self.step_unchecked(v, rng))
    }

    #[inline]
    pub(crate) fn step_unchecked(&self, v: NodeId, rng: &mut RandomStream) -> NodeId {
        let lo = self.offsets[v.index()];
        let hi = self.offsets[v.index() + 1];
        let deg = hi - lo;
        if deg == 1 {
            return self.targets[lo];
        }
        if self.unit_weights {
            return self.targets[lo + rng.below(deg)];
        }
        let x = rng.uniform() * self.degrees[v.index()];
        let slice = &self.cumulative[lo..hi];
        // First entry whose running sum exceeds x; clamp guards x rounding up to d_v.
        let k = slice.partition_point(|&c| c <= x).min(deg - 1);
        self.targets[lo + k]
    }

    /// Checks the structural invariants: symmetric adjacency with matching
    /// weights, positive weights, and degree sums.
    pub fn validate(&self) -> GraphReport {
        let mut asymmetric = 0usize;
        let mut nonpositive = 0usize;
        let mut loop_weight = 0.0;
        for u in self.nodes() {
            for (v, w) in self.neighbors(u) {
                if w.is_nan() || w <= 0.0 {
                    nonpositive += 1;
                }
                if u == v {
                    loop_weight += w;
                    continue;
                }
                let back = self.neighbors(v).filter(|&(x, _)| x == u).map(|(_, bw)| bw);
                let matched: Vec<f64> = back.collect();
                if matched.len() != 1 || matched[0] != w {
                    asymmetric += 1;
                }
            }
        }
        let degree_sum: f64 = self.degrees.iter().sum();
        let expected = 2.0 * self.total_weight - loop_weight;
        let scale = expected.abs().max(1.0);
        GraphReport {
            n: self.node_count(),
            m: self.edge_count,
            total_weight: self.total_weight,
            degree_sum,
            isolated: self.degrees.iter().filter(|&&d| d == 0.0).count(),
            self_loop_weight: loop_weight,
            asymmetric_entries: asymmetric,
            nonpositive_weights: nonpositive,
            degree_sum_ok: (degree_sum - expected).abs() <= 1e-9 * scale,
        }
    }
}

/// Outcome of [`Graph::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct GraphReport {
    pub n: usize,
    pub m: usize,
    pub total_weight: f64,
    pub degree_sum: f64,
    pub isolated: usize,
    pub self_loop_weight: f64,
    pub asymmetric_entries: usize,
    pub nonpositive_weights: usize,
    /// `Σ d_v == 2·total_weight − self_loop_weight` within 1e-9 relative.
    pub degree_sum_ok: bool,
}

impl GraphReport {
    pub fn is_ok(&self) -> bool {
        self.asymmetric_entries == 0 && self.nonpositive_weights == 0 && self.degree_sum_ok
    }
}
