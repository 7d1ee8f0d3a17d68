//! Plain Monte Carlo baseline: the fraction of geometric-length walks from
//! `s` that end at `t`.

use crate::bippr::{chernoff_c, PprEstimate};
use crate::error::{check_open_unit, check_positive, invalid, Result};
use crate::graph::{Graph, NodeId};
use crate::walk::{geometric_walk, walk_batch, RandomStream};

pub fn mc_estimate(
    g: &Graph,
    s: NodeId,
    t: NodeId,
    alpha: f64,
    num_walks: u64,
    rng: &RandomStream,
) -> Result<PprEstimate> {
    check_open_unit("alpha", alpha)?;
    if num_walks == 0 {
        return Err(invalid("num_walks must be positive"));
    }
    g.check_walkable(s)?;
    g.check_node(t)?;
    let totals = walk_batch(num_walks as usize, rng, 1, |rng, _, out| {
        let end = geometric_walk(g, s, alpha, rng);
        if end.terminal == t {
            out[0] = 1.0;
        }
        end.length
    });
    let value = totals.sums[0] / num_walks as f64;
    Ok(PprEstimate {
        source: s,
        target: t,
        value,
        push_term: 0.0,
        walk_term: value,
        alpha,
        params: None,
        walks: num_walks,
        push_count: 0,
        push_work: 0.0,
        walk_steps: totals.steps,
        d_t: g.degree_of(t),
    })
}

/// Walk count `ceil(c / (eps^2 delta))` with the same Chernoff constant as
/// the bidirectional estimator.
pub fn mc_num_walks(delta: f64, eps: f64, p_fail: f64) -> Result<u64> {
    check_positive("delta", delta)?;
    check_positive("eps", eps)?;
    let c = chernoff_c(p_fail)?;
    let w = (c / (eps * eps * delta)).ceil();
    if w > u64::MAX as f64 {
        return Err(invalid(format!("walk count {w:e} is not representable")));
    }
    Ok((w as u64).max(1))
}
