//! Bidirectional PPR estimation on undirected graphs.
//!
//! A forward push from `s` leaves residuals `r` with `r[v] / d_v <= r_max`.
//! Reversibility (`d_s pi_s[t] = d_t pi_t[s]`) turns the push invariant into
//!
//! ```text
//! pi_s[t] = p[t] + d_t * E_{V ~ pi_t}[ r[V] / d_V ]
//! ```
//!
//! and the expectation is estimated from geometric-length walks started at
//! `t`. Every sample lies in `[0, d_t r_max]`, which is what makes a walk
//! count of `c d_t r_max / (eps^2 delta)` sufficient.

use crate::error::{check_open_unit, check_positive, invalid, Result};
use crate::graph::{Graph, NodeId};
use crate::push::{approximate_pagerank, PushResult};
use crate::walk::{geometric_walk, walk_batch, RandomStream};

/// Chernoff constant `3 ln(2 / p_fail)`.
pub fn chernoff_c(p_fail: f64) -> Result<f64> {
    check_open_unit("p_fail", p_fail)?;
    Ok(3.0 * (2.0 / p_fail).ln())
}

/// Residual threshold balancing push work against walk work:
/// `eps sqrt(delta / d_t) / sqrt(ln(1 / p_fail))`, capped at 1.
pub fn choose_r_max(eps: f64, delta: f64, d_t: f64, p_fail: f64) -> Result<f64> {
    check_positive("eps", eps)?;
    check_positive("delta", delta)?;
    check_positive("d_t", d_t)?;
    check_open_unit("p_fail", p_fail)?;
    let r_max = eps * (delta / d_t).sqrt() / (1.0 / p_fail).ln().sqrt();
    Ok(r_max.min(1.0))
}

/// `ceil(c d_t r_max / (eps^2 delta))`, never less than one.
pub fn num_walks(c: f64, d_t: f64, r_max: f64, eps: f64, delta: f64) -> Result<u64> {
    for (name, v) in [("c", c), ("d_t", d_t), ("r_max", r_max), ("eps", eps), ("delta", delta)] {
        check_positive(name, v)?;
    }
    let w = (c * d_t * r_max / (eps * eps * delta)).ceil();
    if w > u64::MAX as f64 {
        return Err(invalid(format!("walk count {w:e} is not representable")));
    }
    Ok((w as u64).max(1))
}

/// Significance threshold `d_t / m`; weighted graphs use total edge weight for `m`.
pub fn significance_delta(g: &Graph, t: NodeId) -> Result<f64> {
    let d_t = g.degree(t)?;
    if g.total_weight() <= 0.0 {
        return Err(invalid("graph has no edges"));
    }
    Ok(d_t / g.total_weight())
}

/// User-facing estimator settings; `c` and `r_max` are derived unless overridden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipprConfig {
    pub alpha: f64,
    pub delta: f64,
    pub eps: f64,
    pub p_fail: f64,
    pub c: Option<f64>,
    pub r_max: Option<f64>,
}

impl BipprConfig {
    pub fn new(alpha: f64, delta: f64, eps: f64, p_fail: f64) -> Self {
        Self { alpha, delta, eps, p_fail, c: None, r_max: None }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = Some(c);
        self
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = Some(r_max);
        self
    }

    /// Fixes every derived quantity for a target of degree `d_t`.
    pub fn resolve(&self, d_t: f64) -> Result<BipprParams> {
        check_open_unit("alpha", self.alpha)?;
        check_positive("delta", self.delta)?;
        check_positive("d_t", d_t)?;
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(invalid(format!("eps must lie in (0, 1], got {}", self.eps)));
        }
        check_open_unit("p_fail", self.p_fail)?;
        let c = match self.c {
            Some(c) => {
                check_positive("c", c)?;
                c
            }
            None => chernoff_c(self.p_fail)?,
        };
        let r_max = match self.r_max {
            Some(r) => {
                check_positive("r_max", r)?;
                r.min(1.0)
            }
            None => choose_r_max(self.eps, self.delta, d_t, self.p_fail)?,
        };
        let walks = num_walks(c, d_t, r_max, self.eps, self.delta)?;
        Ok(BipprParams { alpha: self.alpha, delta: self.delta, eps: self.eps, p_fail: self.p_fail, c, r_max, walks })
    }
}

/// Fully resolved parameters of one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipprParams {
    pub alpha: f64,
    pub delta: f64,
    pub eps: f64,
    pub p_fail: f64,
    pub c: f64,
    pub r_max: f64,
    pub walks: u64,
}

impl BipprParams {
    /// Accuracy bound `max(eps pi, 2 e delta)` for a true value `pi`.
    pub fn error_bound(&self, pi: f64) -> f64 {
        (self.eps * pi).max(2.0 * std::f64::consts::E * self.delta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PprEstimate {
    pub source: NodeId,
    pub target: NodeId,
    /// `push_term + walk_term`.
    pub value: f64,
    pub push_term: f64,
    pub walk_term: f64,
    pub alpha: f64,
    /// Resolved bidirectional parameters; absent for plain Monte Carlo.
    pub params: Option<BipprParams>,
    pub walks: u64,
    pub push_count: u64,
    pub push_work: f64,
    pub walk_steps: u64,
    pub d_t: f64,
}

impl PprEstimate {
    /// Degree-weighted push work plus walk steps.
    pub fn total_work(&self) -> f64 {
        self.push_work + self.walk_steps as f64
    }
}

/// Forward push from a fixed source, reusable across many targets.
#[derive(Debug, Clone)]
pub struct PreparedSource<'g> {
    graph: &'g Graph,
    source: NodeId,
    push: PushResult,
}

impl<'g> PreparedSource<'g> {
    pub fn new(g: &'g Graph, s: NodeId, alpha: f64, r_max: f64) -> Result<Self> {
        let push = approximate_pagerank(g, alpha, s, r_max.min(1.0))?;
        Ok(Self { graph: g, source: s, push })
    }

    pub fn push(&self) -> &PushResult {
        &self.push
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    /// Estimates `pi_s[t]` with the walk count implied by this source's
    /// `r_max`. `c` defaults to [`chernoff_c`].
    pub fn query(
        &self,
        t: NodeId,
        eps: f64,
        delta: f64,
        p_fail: f64,
        c: Option<f64>,
        rng: &RandomStream,
    ) -> Result<PprEstimate> {
        let d_t = self.target_degree(t)?;
        let config = BipprConfig { alpha: self.push.alpha, delta, eps, p_fail, c, r_max: Some(self.push.r_max) };
        let params = config.resolve(d_t)?;
        Ok(self.sample(t, d_t, params, rng))
    }

    /// Estimates `pi_s[t]` with explicitly resolved parameters, e.g. a
    /// hand-picked walk count. `params.r_max` must not be below this source's.
    pub fn query_with(&self, t: NodeId, params: BipprParams, rng: &RandomStream) -> Result<PprEstimate> {
        let d_t = self.target_degree(t)?;
        if params.walks == 0 {
            return Err(invalid("walk count must be positive"));
        }
        if params.r_max < self.push.r_max {
            return Err(invalid(format!(
                "r_max {} is below the prepared push threshold {}",
                params.r_max, self.push.r_max
            )));
        }
        Ok(self.sample(t, d_t, params, rng))
    }

    fn target_degree(&self, t: NodeId) -> Result<f64> {
        self.graph.check_walkable(t)?;
        Ok(self.graph.degree_of(t))
    }

    fn sample(&self, t: NodeId, d_t: f64, params: BipprParams, rng: &RandomStream) -> PprEstimate {
        let g = self.graph;
        let push = &self.push;
        let alpha = push.alpha;
        let bound = d_t * push.r_max * (1.0 + 1e-12);
        let totals = walk_batch(params.walks as usize, rng, 1, |rng, _, out| {
            let end = geometric_walk(g, t, alpha, rng);
            let v = end.terminal;
            let x = push.r.get(v) * d_t / g.degree_of(v);
            assert!(x <= bound, "walk sample {x} exceeds d_t * r_max = {bound}; push left an oversized residual");
            out[0] = x;
            end.length
        });
        let push_term = push.p.get(t);
        let walk_term = totals.sums[0] / params.walks as f64;
        PprEstimate {
            source: self.source,
            target: t,
            value: push_term + walk_term,
            push_term,
            walk_term,
            alpha,
            params: Some(params),
            walks: params.walks,
            push_count: push.push_count,
            push_work: push.degree_work,
            walk_steps: totals.steps,
            d_t,
        }
    }
}

/// Estimates `pi_s[t]` by forward push from `s` and geometric walks from `t`.
///
/// Walks draw from streams derived from `rng`, so the result is a function of
/// the inputs and `(rng.seed(), rng.stream_id())` alone.
pub fn estimate_ppr(g: &Graph, s: NodeId, t: NodeId, config: &BipprConfig, rng: &RandomStream) -> Result<PprEstimate> {
    g.check_walkable(s)?;
    g.check_walkable(t)?;
    let d_t = g.degree_of(t);
    let params = config.resolve(d_t)?;
    let prepared = PreparedSource::new(g, s, params.alpha, params.r_max)?;
    Ok(prepared.sample(t, d_t, params, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_ppr;

    fn k2() -> Graph {
        Graph::from_unweighted_edges(2, &[(0, 1)]).unwrap()
    }

    fn star3() -> Graph {
        Graph::from_unweighted_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    #[test]
    fn chernoff_values() {
        let p = 2.0 / 3f64.exp();
        assert!((chernoff_c(p).unwrap() - 9.0).abs() < 1e-12);
        // 3 ln 2000 = 22.80271...
        let c = chernoff_c(0.001).unwrap();
        assert!((c - 3.0 * 2000f64.ln()).abs() < 1e-12);
        assert!((c - 22.8027).abs() < 1e-4);
        assert!(chernoff_c(2.0).is_err());
        assert!(chernoff_c(0.0).is_err());
    }

    #[test]
    fn r_max_values() {
        let r = choose_r_max(0.1, 1e-4, 10.0, 0.001).unwrap();
        assert!((r - 1.2032e-4).abs() < 1e-8, "{r}");
        let r = choose_r_max(1.0, 10.0, 10.0, 1.0 / std::f64::consts::E).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        // large ratios clamp to 1
        assert_eq!(choose_r_max(1.0, 100.0, 1.0, 0.5).unwrap(), 1.0);
        assert!(choose_r_max(0.1, 0.0, 10.0, 0.001).is_err());
        assert!(choose_r_max(0.1, 1e-4, 10.0, 1.0).is_err());
    }

    #[test]
    fn walk_counts() {
        // 22.8024 * 10 * 1.2032e-4 / (0.01 * 1e-4) = 27435.85...
        assert_eq!(num_walks(22.8024, 10.0, 1.2032e-4, 0.1, 1e-4).unwrap(), 27_436);
        assert_eq!(num_walks(1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 1);
        assert_eq!(num_walks(1.0, 1.0, 1.0, 1.0, 1e30).unwrap(), 1);
        assert!(num_walks(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn resolved_params_follow_formulas() {
        let p = BipprConfig::new(0.2, 1e-4, 0.1, 0.001).resolve(10.0).unwrap();
        assert_eq!(p.c, chernoff_c(0.001).unwrap());
        assert_eq!(p.r_max, choose_r_max(0.1, 1e-4, 10.0, 0.001).unwrap());
        assert_eq!(p.walks, num_walks(p.c, 10.0, p.r_max, 0.1, 1e-4).unwrap());
        let q = BipprConfig::new(0.2, 1e-4, 0.1, 0.001).with_c(1.0).with_r_max(5.0).resolve(10.0).unwrap();
        assert_eq!(q.c, 1.0);
        assert_eq!(q.r_max, 1.0);
        assert!(BipprConfig::new(0.2, 1e-4, 1.5, 0.001).resolve(1.0).is_err());
    }

    #[test]
    fn significance() {
        let k2 = k2();
        assert_eq!(significance_delta(&k2, NodeId(0)).unwrap(), 1.0);
        assert_eq!(significance_delta(&star3(), NodeId(0)).unwrap(), 1.0);
        let path = Graph::from_unweighted_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(significance_delta(&path, NodeId(1)).unwrap(), 1.0);
        assert_eq!(significance_delta(&path, NodeId(0)).unwrap(), 0.5);
        let empty = Graph::from_unweighted_edges(2, &[]).unwrap();
        assert!(significance_delta(&empty, NodeId(0)).is_err());
    }

    #[test]
    fn teleport_limit() {
        let g = star3();
        let config = BipprConfig::new(1.0 - 1e-12, 0.01, 0.1, 0.01);
        let rng = RandomStream::new(1, 0);
        let same = estimate_ppr(&g, NodeId(2), NodeId(2), &config, &rng).unwrap();
        assert!((same.value - 1.0).abs() < 1e-9);
        let other = estimate_ppr(&g, NodeId(2), NodeId(0), &config, &rng).unwrap();
        assert!(other.value.abs() < 1e-9);
    }

    #[test]
    fn estimate_structure() {
        let g = star3();
        let config = BipprConfig::new(0.2, 0.01, 0.1, 0.01);
        let est = estimate_ppr(&g, NodeId(1), NodeId(0), &config, &RandomStream::new(4, 4)).unwrap();
        assert_eq!(est.value, est.push_term + est.walk_term);
        assert!(est.value >= 0.0);
        let params = est.params.unwrap();
        assert_eq!(est.walks, params.walks);
        assert!(est.push_work <= 1.0 / (0.2 * params.r_max));
        assert_eq!(est.d_t, 3.0);
        let again = estimate_ppr(&g, NodeId(1), NodeId(0), &config, &RandomStream::new(4, 4)).unwrap();
        assert_eq!(est, again);
    }

    #[test]
    fn k2_accuracy_battery() {
        let g = k2();
        let config = BipprConfig::new(0.2, 0.01, 0.1, 0.01);
        let truth = 4.0 / 9.0;
        let trials = 1000;
        let inside = (0..trials)
            .filter(|&i| {
                let v = estimate_ppr(&g, NodeId(0), NodeId(1), &config, &RandomStream::new(7, i)).unwrap().value;
                v >= truth * 0.9 && v <= truth * 1.1
            })
            .count();
        assert!(inside as f64 >= 0.99 * trials as f64, "{inside} of {trials}");
    }

    #[test]
    fn star_unbiased() {
        let g = star3();
        let config = BipprConfig::new(0.2, 0.01, 0.1, 0.01);
        let n = 1000;
        let mean = (0..n)
            .map(|i| estimate_ppr(&g, NodeId(1), NodeId(0), &config, &RandomStream::new(8, i)).unwrap().value)
            .sum::<f64>()
            / n as f64;
        let truth = exact_ppr(&g, 0.2, NodeId(1), 1e-13).unwrap()[0];
        assert!((truth - 4.0 / 9.0).abs() < 1e-9);
        assert!((mean - truth).abs() <= 0.005, "mean {mean}");
    }

    #[test]
    fn prepared_source_reuse() {
        let g = Graph::from_unweighted_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (1, 4)]).unwrap();
        let config = BipprConfig::new(0.2, 0.05, 0.2, 0.05);
        let params = config.resolve(g.degree_of(NodeId(4))).unwrap();
        let prepared = PreparedSource::new(&g, NodeId(0), 0.2, params.r_max).unwrap();
        let rng = RandomStream::new(2, 9);
        let a = prepared.query(NodeId(4), 0.2, 0.05, 0.05, None, &rng).unwrap();
        let b = estimate_ppr(&g, NodeId(0), NodeId(4), &config, &rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn isolated_endpoints() {
        let g = Graph::from_unweighted_edges(3, &[(0, 1)]).unwrap();
        let config = BipprConfig::new(0.2, 0.1, 0.1, 0.1);
        let rng = RandomStream::new(0, 0);
        assert!(estimate_ppr(&g, NodeId(2), NodeId(0), &config, &rng).is_err());
        assert!(estimate_ppr(&g, NodeId(0), NodeId(2), &config, &rng).is_err());
    }
}
