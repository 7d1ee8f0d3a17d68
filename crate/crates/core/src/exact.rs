//! Dense reference computations: personalized PageRank by power iteration,
//! multi-step transition probabilities, and truncated diffusions.
//!
//! These are oracles for desk-scale graphs. Every vector here is dense.

use crate::error::{check_open_unit, check_positive, invalid, Error, Result};
use crate::graph::{Graph, NodeId};
use crate::mstp::DiffusionWeights;

pub type DenseVector = Vec<f64>;

/// `x W` for a row vector `x`, where `W = D^{-1} A`.
pub fn transition_step(g: &Graph, x: &[f64]) -> DenseVector {
    let mut out = vec![0.0; g.node_count()];
    for u in g.nodes() {
        let mass = x[u.index()];
        if mass == 0.0 {
            continue;
        }
        let d = g.degree_of(u);
        for (v, w) in g.neighbors(u) {
            out[v.index()] += mass * w / d;
        }
    }
    out
}

pub fn unit_vector(n: usize, s: NodeId) -> DenseVector {
    let mut e = vec![0.0; n];
    e[s.index()] = 1.0;
    e
}

/// Personalized PageRank of `s`: the fixed point of `pi = alpha e_s + (1 - alpha) pi W`.
///
/// Iterates from `e_s` until the L1 change between iterates is at most
/// `tol * alpha`. Since the map contracts by `1 - alpha` in L1, the returned
/// vector is within `tol` of the fixed point in L1 (hence in the max norm)
/// and its fixed-point residual is below `tol`.
pub fn exact_ppr(g: &Graph, alpha: f64, s: NodeId, tol: f64) -> Result<DenseVector> {
    g.check_walkable(s)?;
    exact_ppr_from(g, alpha, &unit_vector(g.node_count(), s), tol)
}

/// Same iteration for a general source distribution `sigma`.
pub fn exact_ppr_from(g: &Graph, alpha: f64, sigma: &[f64], tol: f64) -> Result<DenseVector> {
    check_open_unit("alpha", alpha)?;
    check_positive("tol", tol)?;
    let n = g.node_count();
    if sigma.len() != n {
        return Err(invalid(format!("source distribution has length {}, graph has {n} nodes", sigma.len())));
    }
    let total: f64 = sigma.iter().sum();
    if sigma.iter().any(|&x| x.is_nan() || x < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(invalid("source distribution must be nonnegative and sum to 1"));
    }
    for (i, &x) in sigma.iter().enumerate() {
        if x > 0.0 {
            g.check_walkable(NodeId::from(i))?;
        }
    }

    // Contraction gives convergence in log(tol)/log(1 - alpha) rounds; allow
    // slack for roundoff before declaring failure.
    let rounds = ((tol * alpha / 2.0).ln() / (1.0 - alpha).ln()).ceil().max(1.0);
    let max_iter = 2 * rounds.min(1e7) as usize + 100;
    let threshold = tol * alpha;

    let mut pi = sigma.to_vec();
    let mut change = f64::INFINITY;
    for _ in 0..max_iter {
        let walked = transition_step(g, &pi);
        let mut next = Vec::with_capacity(n);
        change = 0.0;
        for i in 0..n {
            let v = alpha * sigma[i] + (1.0 - alpha) * walked[i];
            change += (v - pi[i]).abs();
            next.push(v);
        }
        pi = next;
        if change <= threshold {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, last_change: change })
}

/// Global PageRank: personalized PageRank from the uniform distribution over
/// non-isolated nodes.
pub fn exact_global_pagerank(g: &Graph, alpha: f64, tol: f64) -> Result<DenseVector> {
    let live = g.degrees().iter().filter(|&&d| d > 0.0).count();
    if live == 0 {
        return Err(invalid("graph has no edges"));
    }
    let sigma: Vec<f64> = g.degrees().iter().map(|&d| if d > 0.0 { 1.0 / live as f64 } else { 0.0 }).collect();
    exact_ppr_from(g, alpha, &sigma, tol)
}

/// `[e_s W^0, e_s W^1, ..., e_s W^ell_max]`.
pub fn exact_mstp(g: &Graph, s: NodeId, ell_max: usize) -> Result<Vec<DenseVector>> {
    g.check_walkable(s)?;
    let mut levels = Vec::with_capacity(ell_max + 1);
    levels.push(unit_vector(g.node_count(), s));
    for l in 0..ell_max {
        let next = transition_step(g, &levels[l]);
        levels.push(next);
    }
    Ok(levels)
}

/// Truncated diffusion `sum_l alphas[l] e_s W^l`; the tail mass is not added.
pub fn exact_diffusion(g: &Graph, weights: &DiffusionWeights, s: NodeId) -> Result<DenseVector> {
    let levels = exact_mstp(g, s, weights.ell_max())?;
    let mut out = vec![0.0; g.node_count()];
    for (a, p) in weights.alphas().iter().zip(&levels) {
        for (o, x) in out.iter_mut().zip(p) {
            *o += a * x;
        }
    }
    Ok(out)
}
