//! Small deterministic and seeded random graph families.

use rustc_hash::FxHashSet;

use crate::graph::Graph;
use crate::walk::RandomStream;

pub fn complete(n: usize) -> Graph {
    let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    Graph::from_unweighted_edges(n, &edges).expect("valid complete graph")
}

/// Star with center `0` and leaves `1..=leaves`.
pub fn star(leaves: usize) -> Graph {
    let edges: Vec<_> = (1..=leaves).map(|v| (0, v)).collect();
    Graph::from_unweighted_edges(leaves + 1, &edges).expect("valid star")
}

pub fn path(n: usize) -> Graph {
    let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
    Graph::from_unweighted_edges(n, &edges).expect("valid path")
}

pub fn cycle(n: usize) -> Graph {
    let mut edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
    if n > 2 {
        edges.push((n - 1, 0));
    }
    Graph::from_unweighted_edges(n, &edges).expect("valid cycle")
}

/// Connected Erdős–Rényi-style graph: a random recursive tree (node `i`
/// attaches to a uniform earlier node) plus each remaining pair with
/// probability `p`.
pub fn connected_gnp(n: usize, p: f64, rng: &mut RandomStream) -> Graph {
    let mut edges = FxHashSet::default();
    for v in 1..n {
        let u = rng.below(v);
        edges.insert((u, v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.uniform() < p {
                edges.insert((u, v));
            }
        }
    }
    let mut list: Vec<_> = edges.into_iter().collect();
    list.sort_unstable();
    Graph::from_unweighted_edges(n, &list).expect("valid gnp graph")
}

/// Preferential attachment: starts from a clique on `attach + 1` nodes and
/// links each new node to `attach` distinct existing nodes chosen with
/// probability proportional to degree. Always connected.
pub fn barabasi_albert(n: usize, attach: usize, rng: &mut RandomStream) -> Graph {
    let attach = attach.max(1);
    let seed_size = (attach + 1).min(n);
    let mut edges = Vec::new();
    // Each endpoint appears once per incident edge: uniform picks are degree-proportional.
    let mut endpoints = Vec::new();
    for u in 0..seed_size {
        for v in u + 1..seed_size {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    if seed_size == 1 && n > 1 {
        endpoints.push(0);
    }
    for v in seed_size..n {
        let mut chosen = FxHashSet::default();
        let mut picks = Vec::new();
        while chosen.len() < attach.min(v) {
            let u = endpoints[rng.below(endpoints.len())];
            if chosen.insert(u) {
                picks.push(u);
            }
        }
        for u in picks {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    Graph::from_unweighted_edges(n, &edges).expect("valid preferential-attachment graph")
}

/// Copy of `g`'s edges with independent weights drawn from `[low, high)`.
pub fn reweighted(g: &Graph, low: f64, high: f64, rng: &mut RandomStream) -> Graph {
    let mut edges = Vec::new();
    for u in g.nodes() {
        for (v, _) in g.neighbors(u) {
            if u <= v {
                edges.push((u.index(), v.index(), low + (high - low) * rng.uniform()));
            }
        }
    }
    Graph::from_edges(g.node_count(), &edges).expect("valid reweighted graph")
}
