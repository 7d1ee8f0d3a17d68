//! Multi-step transition probabilities and graph diffusions.
//!
//! [`approximate_mstp`] pushes mass level by level: pushing `v` at level `i`
//! settles `r[i][v]` into `q[i][v]` and moves it, split by edge weight, into
//! level `i + 1`. The top level is never pushed. On return, for every `t`
//! and `l <= ell_max`,
//!
//! ```text
//! p_s^l[t] = q[l][t] + sum_{k <= l} sum_v r[k][v] p_v^{l-k}[t]
//!          = q[l][t] + d_t sum_{k <= l} sum_v (r[k][v] / d_v) p_t^{l-k}[v]
//! ```
//!
//! and the second form is an expectation over length-`l` walks from `t`.

use crate::error::{check_open_unit, check_positive, invalid, Result};
use crate::graph::{Graph, NodeId};
use crate::push::SparseVector;
use crate::walk::{fixed_walk_into, walk_batch, RandomStream};

/// Nonnegative per-length weights `alphas[0..=ell_max]` and the mass beyond
/// `ell_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionWeights {
    alphas: Vec<f64>,
    tail: f64,
}

impl DiffusionWeights {
    pub fn new(alphas: Vec<f64>, tail: f64) -> Result<Self> {
        if alphas.is_empty() {
            return Err(invalid("diffusion needs at least one weight"));
        }
        if alphas.iter().chain([&tail]).any(|&a| !(a >= 0.0 && a.is_finite())) {
            return Err(invalid("diffusion weights must be nonnegative and finite"));
        }
        let total: f64 = alphas.iter().sum::<f64>() + tail;
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("diffusion weights plus tail sum to {total}, expected 1")));
        }
        Ok(Self { alphas, tail })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Mass beyond `ell_max`; bounds the max-norm truncation error.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn ell_max(&self) -> usize {
        self.alphas.len() - 1
    }
}

/// `alphas[i] = alpha (1 - alpha)^i`, tail `(1 - alpha)^(ell_max + 1)`.
pub fn pagerank_weights(alpha: f64, ell_max: usize) -> Result<DiffusionWeights> {
    check_open_unit("alpha", alpha)?;
    let keep = 1.0 - alpha;
    let alphas = (0..=ell_max).map(|i| alpha * keep.powi(i as i32)).collect();
    DiffusionWeights::new(alphas, pagerank_tail(alpha, ell_max))
}

fn pagerank_tail(alpha: f64, ell_max: usize) -> f64 {
    (1.0 - alpha).powi(ell_max as i32 + 1)
}

/// Poisson weights `e^-gamma gamma^i / i!` built by the ratio recurrence.
pub fn heat_kernel_weights(gamma: f64, ell_max: usize) -> Result<DiffusionWeights> {
    check_positive("gamma", gamma)?;
    let mut alphas = Vec::with_capacity(ell_max + 1);
    let mut a = (-gamma).exp();
    alphas.push(a);
    for i in 1..=ell_max {
        a *= gamma / i as f64;
        alphas.push(a);
    }
    let tail = (1.0 - alphas.iter().sum::<f64>()).max(0.0);
    DiffusionWeights::new(alphas, tail)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionFamily {
    PageRank { alpha: f64 },
    HeatKernel { gamma: f64 },
}

/// Levels past which truncation search gives up.
const MAX_LEVELS: usize = 1 << 20;

impl DiffusionFamily {
    pub fn weights(&self, ell_max: usize) -> Result<DiffusionWeights> {
        match *self {
            DiffusionFamily::PageRank { alpha } => pagerank_weights(alpha, ell_max),
            DiffusionFamily::HeatKernel { gamma } => heat_kernel_weights(gamma, ell_max),
        }
    }

    /// Smallest `ell_max` whose tail mass is at most `trunc_tol`.
    ///
    /// Tails within 1e-12 relative of the tolerance count as meeting it, so
    /// that exactly representable cut-offs (e.g. `0.8^3` for `0.512`) are not
    /// lost to rounding.
    pub fn choose_ell_max(&self, trunc_tol: f64) -> Result<usize> {
        if !(trunc_tol > 0.0 && trunc_tol <= 1.0) {
            return Err(invalid(format!("trunc_tol must lie in (0, 1], got {trunc_tol}")));
        }
        let meets = |tail: f64| tail <= trunc_tol * (1.0 + 1e-12);
        match *self {
            DiffusionFamily::PageRank { alpha } => {
                check_open_unit("alpha", alpha)?;
                let guess = (trunc_tol.ln() / (1.0 - alpha).ln()).ceil() - 1.0;
                if guess.is_nan() || guess >= MAX_LEVELS as f64 {
                    return Err(invalid("truncation needs too many levels"));
                }
                let mut ell = guess.max(0.0) as usize;
                while ell > 0 && meets(pagerank_tail(alpha, ell - 1)) {
                    ell -= 1;
                }
                while !meets(pagerank_tail(alpha, ell)) {
                    ell += 1;
                }
                Ok(ell)
            }
            DiffusionFamily::HeatKernel { gamma } => {
                check_positive("gamma", gamma)?;
                let mut term = (-gamma).exp();
                let mut sum = term;
                let mut ell = 0;
                while !meets((1.0 - sum).max(0.0)) {
                    ell += 1;
                    if ell >= MAX_LEVELS {
                        return Err(invalid(format!("heat kernel tail never reaches {trunc_tol}")));
                    }
                    term *= gamma / ell as f64;
                    sum += term;
                }
                Ok(ell)
            }
        }
    }
}

/// Per-level estimates `q` and residuals `r` of a multi-level push.
#[derive(Debug, Clone, PartialEq)]
pub struct MstpState {
    pub source: NodeId,
    pub q: Vec<SparseVector>,
    pub r: Vec<SparseVector>,
    pub ell_max: usize,
    pub r_max: f64,
    pub push_count: u64,
    pub degree_work: f64,
}

/// State handed to an observer after each multi-level push.
#[derive(Debug)]
pub struct MstpProgress<'a> {
    pub level: usize,
    pub pushed: NodeId,
    pub q: &'a [SparseVector],
    pub r: &'a [SparseVector],
}

pub fn approximate_mstp(g: &Graph, s: NodeId, ell_max: usize, r_max: f64) -> Result<MstpState> {
    approximate_mstp_observed(g, s, ell_max, r_max, |_| {})
}

pub fn approximate_mstp_observed<F>(
    g: &Graph,
    s: NodeId,
    ell_max: usize,
    r_max: f64,
    mut observer: F,
) -> Result<MstpState>
where
    F: FnMut(&MstpProgress<'_>),
{
    g.check_walkable(s)?;
    check_positive("r_max", r_max)?;
    let mut q = vec![SparseVector::new(); ell_max + 1];
    let mut r = vec![SparseVector::new(); ell_max + 1];
    r[0].set(s, 1.0);
    let mut push_count = 0u64;
    let mut degree_work = 0.0;

    for level in 0..ell_max {
        // Pushing level i only feeds level i + 1, so one ordered pass empties
        // every over-threshold entry.
        let frontier: Vec<NodeId> =
            r[level].sorted().into_iter().filter(|&(v, x)| x / g.degree_of(v) > r_max).map(|(v, _)| v).collect();
        for v in frontier {
            let dv = g.degree_of(v);
            let (lower, upper) = r.split_at_mut(level + 1);
            let mass = lower[level].take(v);
            q[level].add(v, mass);
            for (u, w) in g.neighbors(v) {
                upper[0].add(u, mass * w / dv);
            }
            push_count += 1;
            degree_work += dv;
            observer(&MstpProgress { level, pushed: v, q: &q, r: &r });
        }
    }

    Ok(MstpState { source: s, q, r, ell_max, r_max, push_count, degree_work })
}

/// Sample for one trajectory `positions[0..=l]` started at `t`:
/// `sum_k r[k][W_{l-k}] d_t / d_{W_{l-k}}`.
#[inline]
fn level_sample(g: &Graph, state: &MstpState, positions: &[NodeId], ell: usize, d_t: f64) -> f64 {
    let mut x = 0.0;
    for k in 0..=ell {
        let residual = &state.r[k];
        if residual.is_empty() {
            continue;
        }
        let v = positions[ell - k];
        let rv = residual.get(v);
        if rv != 0.0 {
            let contribution = rv * d_t / g.degree_of(v);
            debug_assert!(k == state.ell_max || contribution <= d_t * state.r_max * (1.0 + 1e-12));
            x += contribution;
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct MstpEstimate {
    pub value: f64,
    pub q_term: f64,
    pub walk_term: f64,
    pub walks: u64,
    pub walk_steps: u64,
}

/// Unbiased estimate of `p_s^ell[t]` from `state` (built at `s`) and `walks`
/// length-`ell` walks from `t`.
pub fn bidir_mstp(
    g: &Graph,
    t: NodeId,
    ell: usize,
    state: &MstpState,
    walks: u64,
    rng: &RandomStream,
) -> Result<MstpEstimate> {
    if ell > state.ell_max {
        return Err(invalid(format!("level {ell} exceeds the state's ell_max {}", state.ell_max)));
    }
    if walks == 0 {
        return Err(invalid("walk count must be positive"));
    }
    g.check_walkable(t)?;
    let d_t = g.degree_of(t);
    let totals = walk_batch(walks as usize, rng, 1, |rng, positions, out| {
        fixed_walk_into(g, t, ell, rng, positions);
        out[0] = level_sample(g, state, positions, ell, d_t);
        ell
    });
    let q_term = state.q[ell].get(t);
    let walk_term = totals.sums[0] / walks as f64;
    Ok(MstpEstimate { value: q_term + walk_term, q_term, walk_term, walks, walk_steps: totals.steps })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelEstimate {
    pub ell: usize,
    pub alpha_ell: f64,
    /// Estimate of `p_s^ell[t]`, before weighting.
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionEstimate {
    pub value: f64,
    /// Tail mass of the weights; `|f - E[value]| <= trunc_bound`.
    pub trunc_bound: f64,
    pub ell_max: usize,
    pub per_level: Vec<LevelEstimate>,
    pub push_count: u64,
    pub push_work: f64,
    pub walks_per_level: u64,
    pub walk_steps: u64,
}

/// How walks are allotted across levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WalkSharing {
    /// One batch of length-`ell_max` walks; level `l` reads each prefix of
    /// length `l`. Levels become correlated but each stays unbiased.
    #[default]
    Shared,
    /// A separate batch per level, drawn from `rng.derive(l)`.
    Independent,
}

/// Estimates the truncated diffusion `sum_l alphas[l] p_s^l[t]`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_diffusion(
    g: &Graph,
    s: NodeId,
    t: NodeId,
    weights: &DiffusionWeights,
    r_max: f64,
    walks_per_level: u64,
    sharing: WalkSharing,
    rng: &RandomStream,
) -> Result<DiffusionEstimate> {
    g.check_walkable(s)?;
    g.check_walkable(t)?;
    if walks_per_level == 0 {
        return Err(invalid("walk count must be positive"));
    }
    let ell_max = weights.ell_max();
    let state = approximate_mstp(g, s, ell_max, r_max)?;
    let d_t = g.degree_of(t);

    let (levels, walk_steps): (Vec<f64>, u64) = match sharing {
        WalkSharing::Shared => {
            let totals = walk_batch(walks_per_level as usize, rng, ell_max + 1, |rng, positions, out| {
                fixed_walk_into(g, t, ell_max, rng, positions);
                for (ell, slot) in out.iter_mut().enumerate() {
                    *slot = level_sample(g, &state, positions, ell, d_t);
                }
                ell_max
            });
            let levels = totals
                .sums
                .iter()
                .enumerate()
                .map(|(ell, sum)| state.q[ell].get(t) + sum / walks_per_level as f64)
                .collect();
            (levels, totals.steps)
        }
        WalkSharing::Independent => {
            let mut levels = Vec::with_capacity(ell_max + 1);
            let mut steps = 0;
            for ell in 0..=ell_max {
                let est = bidir_mstp(g, t, ell, &state, walks_per_level, &rng.derive(ell as u64))?;
                levels.push(est.value);
                steps += est.walk_steps;
            }
            (levels, steps)
        }
    };

    let per_level: Vec<LevelEstimate> = weights
        .alphas()
        .iter()
        .zip(&levels)
        .enumerate()
        .map(|(ell, (&alpha_ell, &estimate))| LevelEstimate { ell, alpha_ell, estimate })
        .collect();
    let value = per_level.iter().map(|l| l.alpha_ell * l.estimate).sum();
    Ok(DiffusionEstimate {
        value,
        trunc_bound: weights.tail(),
        ell_max,
        per_level,
        push_count: state.push_count,
        push_work: state.degree_work,
        walks_per_level,
        walk_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_diffusion, exact_mstp, exact_ppr};

    fn k2() -> Graph {
        Graph::from_unweighted_edges(2, &[(0, 1)]).unwrap()
    }
    fn k3() -> Graph {
        Graph::from_unweighted_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn pagerank_weight_values() {
        let w = pagerank_weights(0.2, 0).unwrap();
        assert_eq!(w.alphas(), &[0.2]);
        assert!((w.tail() - 0.8).abs() < 1e-15);
        let w = pagerank_weights(0.2, 2).unwrap();
        for (a, b) in w.alphas().iter().zip([0.2, 0.16, 0.128]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((w.tail() - 0.512).abs() < 1e-15);
        assert!((w.alphas().iter().sum::<f64>() + w.tail() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn heat_kernel_weight_values() {
        let w = heat_kernel_weights(1.0, 2).unwrap();
        for (a, b) in w.alphas().iter().zip([0.367879, 0.367879, 0.183940]) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!((w.tail() - 0.080301).abs() < 1e-6);
        let w = heat_kernel_weights(1e-12, 3).unwrap();
        assert!((w.alphas()[0] - 1.0).abs() < 1e-11);
        assert!(w.tail() < 1e-12);
        assert!(heat_kernel_weights(0.0, 3).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(DiffusionWeights::new(vec![0.5, 0.5], 0.0).is_ok());
        assert!(DiffusionWeights::new(vec![0.5, 0.4], 0.0).is_err());
        assert!(DiffusionWeights::new(vec![1.5, -0.5], 0.0).is_err());
        assert!(DiffusionWeights::new(vec![], 1.0).is_err());
    }

    #[test]
    fn ell_max_selection() {
        let pr = DiffusionFamily::PageRank { alpha: 0.2 };
        assert_eq!(pr.choose_ell_max(0.512).unwrap(), 2);
        assert_eq!(pr.choose_ell_max(1.0).unwrap(), 0);
        assert_eq!(pr.choose_ell_max(0.8).unwrap(), 0);
        assert_eq!(pr.choose_ell_max(0.79).unwrap(), 1);
        let ell = pr.choose_ell_max(1e-6).unwrap();
        assert!(pagerank_weights(0.2, ell).unwrap().tail() <= 1e-6);
        assert!(pagerank_weights(0.2, ell - 1).unwrap().tail() > 1e-6);

        let hk = DiffusionFamily::HeatKernel { gamma: 1.0 };
        assert_eq!(hk.choose_ell_max(0.081).unwrap(), 2);
        assert_eq!(hk.choose_ell_max(0.08).unwrap(), 3);
        assert!(hk.choose_ell_max(0.0).is_err());
    }

    #[test]
    fn zero_pushes_when_r_max_large() {
        let state = approximate_mstp(&k3(), NodeId(0), 3, 1.0).unwrap();
        assert!(state.q.iter().all(SparseVector::is_empty));
        assert_eq!(state.r[0], SparseVector::unit(NodeId(0)));
        assert!(state.r[1..].iter().all(SparseVector::is_empty));
    }

    #[test]
    fn k2_hand_trace() {
        let state = approximate_mstp(&k2(), NodeId(0), 2, 0.5).unwrap();
        assert_eq!(state.q[0], SparseVector::unit(NodeId(0)));
        assert_eq!(state.q[1], SparseVector::unit(NodeId(1)));
        assert!(state.q[2].is_empty());
        assert!(state.r[0].is_empty() && state.r[1].is_empty());
        assert_eq!(state.r[2], SparseVector::unit(NodeId(0)));
        assert_eq!(state.push_count, 2);

        // walk from a is a, b, a; only r[2][a] = 1 contributes
        let est = bidir_mstp(&k2(), NodeId(0), 2, &state, 5, &RandomStream::new(0, 0)).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.q_term, 0.0);
    }

    fn check_invariant(g: &Graph, state_q: &[SparseVector], state_r: &[SparseVector], s: NodeId, tol: f64) {
        let ell_max = state_q.len() - 1;
        let rows: Vec<_> = g.nodes().map(|v| exact_mstp(g, v, ell_max).unwrap()).collect();
        for t in 0..g.node_count() {
            for l in 0..=ell_max {
                let mut rhs = state_q[l].get(NodeId::from(t));
                for k in 0..=l {
                    for (v, x) in state_r[k].sorted() {
                        rhs += x * rows[v.index()][l - k][t];
                    }
                }
                let lhs = rows[s.index()][l][t];
                assert!((lhs - rhs).abs() <= tol, "t={t} l={l}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn invariant_on_k3() {
        let g = k3();
        for r_max in [0.1, 0.3, 0.7] {
            let state = approximate_mstp(&g, NodeId(0), 4, r_max).unwrap();
            check_invariant(&g, &state.q, &state.r, NodeId(0), 1e-12);
            for level in &state.r[..4] {
                for (v, x) in level.iter() {
                    assert!(x / g.degree_of(v) <= r_max);
                }
            }
        }
    }

    #[test]
    fn invariant_after_each_push_weighted() {
        let g = Graph::from_edges(5, &[(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0), (3, 4, 1.0), (4, 0, 1.0), (2, 2, 1.0)])
            .unwrap();
        let mut pushes = 0;
        let state = approximate_mstp_observed(&g, NodeId(2), 5, 0.05, |step| {
            check_invariant(&g, step.q, step.r, NodeId(2), 1e-12);
            pushes += 1;
        })
        .unwrap();
        assert_eq!(pushes as u64, state.push_count);
        assert!(pushes > 3);
    }

    #[test]
    fn fully_pushed_levels_are_exact() {
        let g = k3();
        let state = approximate_mstp(&g, NodeId(0), 5, 1e-9).unwrap();
        let exact = exact_mstp(&g, NodeId(0), 5).unwrap();
        for l in 0..5 {
            let est = bidir_mstp(&g, NodeId(1), l, &state, 3, &RandomStream::new(1, 1)).unwrap();
            assert_eq!(est.walk_term, 0.0);
            assert!((est.value - exact[l][1]).abs() < 1e-15);
        }
    }

    #[test]
    fn k3_level_two_estimate() {
        let g = k3();
        let state = approximate_mstp(&g, NodeId(0), 2, 0.4).unwrap();
        let est = bidir_mstp(&g, NodeId(1), 2, &state, 100_000, &RandomStream::new(5, 5)).unwrap();
        assert!((est.value - 0.25).abs() <= 0.01, "{}", est.value);
    }

    #[test]
    fn bidir_errors() {
        let g = Graph::from_unweighted_edges(3, &[(0, 1)]).unwrap();
        let state = approximate_mstp(&g, NodeId(0), 2, 0.5).unwrap();
        let rng = RandomStream::new(0, 0);
        assert!(bidir_mstp(&g, NodeId(1), 3, &state, 10, &rng).is_err());
        assert!(bidir_mstp(&g, NodeId(2), 1, &state, 10, &rng).is_err());
        assert!(approximate_mstp(&g, NodeId(2), 2, 0.5).is_err());
    }

    #[test]
    fn single_weight_diffusion() {
        let g = k3();
        let w = DiffusionWeights::new(vec![1.0], 0.0).unwrap();
        let rng = RandomStream::new(0, 0);
        let same = estimate_diffusion(&g, NodeId(1), NodeId(1), &w, 0.1, 4, WalkSharing::Shared, &rng).unwrap();
        assert_eq!(same.value, 1.0);
        let other = estimate_diffusion(&g, NodeId(1), NodeId(2), &w, 0.1, 4, WalkSharing::Shared, &rng).unwrap();
        assert_eq!(other.value, 0.0);
    }

    #[test]
    fn pagerank_diffusion_on_k2() {
        let g = k2();
        let family = DiffusionFamily::PageRank { alpha: 0.2 };
        let weights = family.weights(family.choose_ell_max(1e-6).unwrap()).unwrap();
        let est = estimate_diffusion(
            &g,
            NodeId(0),
            NodeId(1),
            &weights,
            0.01,
            10_000,
            WalkSharing::Shared,
            &RandomStream::new(3, 3),
        )
        .unwrap();
        assert!(est.trunc_bound <= 1e-6);
        let truth = exact_ppr(&g, 0.2, NodeId(0), 1e-13).unwrap()[1];
        assert!((est.value - truth).abs() <= 0.01);
    }

    #[test]
    fn heat_kernel_on_k2() {
        let g = k2();
        let family = DiffusionFamily::HeatKernel { gamma: 1.0 };
        let weights = family.weights(family.choose_ell_max(1e-9).unwrap()).unwrap();
        let truth = 1f64.sinh() / 1f64.exp();
        let oracle = exact_diffusion(&g, &weights, NodeId(0)).unwrap()[1];
        assert!((oracle - truth).abs() <= 1e-9);
        for sharing in [WalkSharing::Shared, WalkSharing::Independent] {
            let est =
                estimate_diffusion(&g, NodeId(0), NodeId(1), &weights, 0.3, 20_000, sharing, &RandomStream::new(4, 4))
                    .unwrap();
            assert!((est.value - truth).abs() <= 0.01, "{sharing:?}: {}", est.value);
            assert_eq!(est.per_level.len(), weights.alphas().len());
        }
    }
}
