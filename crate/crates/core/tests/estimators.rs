//! Statistical checks of the samplers and estimators against dense oracles.

use bippr::exact::{exact_mstp, exact_ppr};
use bippr::generators::{barabasi_albert, complete, star};
use bippr::mstp::{approximate_mstp, bidir_mstp};
use bippr::{
    estimate_ppr, mc_estimate, sample_geometric_walk, BipprConfig, Graph, NodeId, PreparedSource, RandomStream,
};

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn fixtures() -> Vec<(&'static str, Graph)> {
    let mut rng = RandomStream::new(77, 0);
    vec![
        ("k2", complete(2)),
        ("k3", complete(3)),
        ("s3", star(3)),
        ("ba40", barabasi_albert(40, 2, &mut rng)),
        (
            "weighted",
            Graph::from_edges(5, &[(0, 1, 2.0), (1, 2, 0.5), (2, 3, 1.0), (3, 4, 3.0), (4, 0, 1.0), (1, 3, 1.0)])
                .unwrap(),
        ),
    ]
}

#[test]
fn bippr_unbiased_on_fixtures() {
    let config = BipprConfig::new(0.2, 0.05, 0.5, 0.1);
    for (name, g) in fixtures() {
        let (s, t) = (NodeId(1), NodeId::from(g.node_count() - 1));
        let truth = exact_ppr(&g, 0.2, s, 1e-13).unwrap()[t.index()];
        let xs: Vec<f64> =
            (0..10_000).map(|i| estimate_ppr(&g, s, t, &config, &RandomStream::new(100, i)).unwrap().value).collect();
        let (mean, se) = mean_and_se(&xs);
        assert!((mean - truth).abs() <= (4.0 * se).max(1e-12), "{name}: mean {mean} truth {truth} se {se}");
    }
}

#[test]
fn mc_unbiased_on_fixtures() {
    for (name, g) in fixtures() {
        let (s, t) = (NodeId(0), NodeId(1));
        let truth = exact_ppr(&g, 0.2, s, 1e-13).unwrap()[t.index()];
        let xs: Vec<f64> =
            (0..2_000).map(|i| mc_estimate(&g, s, t, 0.2, 50, &RandomStream::new(200, i)).unwrap().value).collect();
        let (mean, se) = mean_and_se(&xs);
        assert!((mean - truth).abs() <= 4.0 * se, "{name}: mean {mean} truth {truth} se {se}");
    }
}

#[test]
fn swapped_roles_agree_up_to_degrees() {
    let mut rng = RandomStream::new(5, 0);
    let g = barabasi_albert(60, 2, &mut rng);
    let (s, t) = (NodeId(3), NodeId(40));
    let config = BipprConfig::new(0.2, 0.01, 0.2, 0.05);
    let runs = 400;
    let forward: Vec<f64> = (0..runs)
        .map(|i| estimate_ppr(&g, s, t, &config, &RandomStream::new(1, i)).unwrap().value * g.degree(s).unwrap())
        .collect();
    let backward: Vec<f64> = (0..runs)
        .map(|i| estimate_ppr(&g, t, s, &config, &RandomStream::new(2, i)).unwrap().value * g.degree(t).unwrap())
        .collect();
    let (m1, se1) = mean_and_se(&forward);
    let (m2, se2) = mean_and_se(&backward);
    assert!((m1 - m2).abs() <= 4.0 * (se1 * se1 + se2 * se2).sqrt() + 1e-12, "{m1} vs {m2}");
}

#[test]
fn prepared_source_serves_many_targets() {
    let mut rng = RandomStream::new(6, 0);
    let g = barabasi_albert(50, 3, &mut rng);
    let s = NodeId(7);
    let exact = exact_ppr(&g, 0.15, s, 1e-13).unwrap();
    let prepared = PreparedSource::new(&g, s, 0.15, 1e-3).unwrap();
    for t in g.nodes() {
        let xs: Vec<f64> = (0..300)
            .map(|i| prepared.query(t, 0.3, 0.05, 0.1, None, &RandomStream::new(t.0 as u64, i)).unwrap().value)
            .collect();
        let (mean, se) = mean_and_se(&xs);
        assert!((mean - exact[t.index()]).abs() <= 4.5 * se + 1e-12, "t={t}");
    }
}

/// Pearson chi-square of geometric-walk terminals against exact PPR.
#[test]
fn terminal_law_chi_square() {
    let g = Graph::from_edges(
        6,
        &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 4, 0.5), (4, 5, 1.0), (5, 0, 1.0), (1, 4, 1.0), (2, 2, 1.0)],
    )
    .unwrap();
    let alpha = 0.25;
    let exact = exact_ppr(&g, alpha, NodeId(0), 1e-13).unwrap();
    let n = 100_000;
    let mut rng = RandomStream::new(9, 9);
    let mut counts = [0usize; 6];
    for _ in 0..n {
        counts[sample_geometric_walk(&g, NodeId(0), alpha, &mut rng).unwrap().terminal.index()] += 1;
    }
    let chi2: f64 = counts.iter().zip(&exact).map(|(&c, &p)| (c as f64 - n as f64 * p).powi(2) / (n as f64 * p)).sum();
    // 5 degrees of freedom, upper 1e-3 quantile
    assert!(chi2 < 20.515, "chi2 = {chi2}");
}

#[test]
fn mstp_estimates_unbiased_and_symmetric() {
    let mut rng = RandomStream::new(8, 0);
    let g = barabasi_albert(30, 2, &mut rng);
    let (s, t, ell) = (NodeId(2), NodeId(25), 4);
    let exact_s = exact_mstp(&g, s, ell).unwrap();
    let exact_t = exact_mstp(&g, t, ell).unwrap();
    let ds = g.degree(s).unwrap();
    let dt = g.degree(t).unwrap();
    assert!((ds * exact_s[ell][t.index()] - dt * exact_t[ell][s.index()]).abs() <= 1e-12);

    let state_s = approximate_mstp(&g, s, ell, 0.05).unwrap();
    let state_t = approximate_mstp(&g, t, ell, 0.05).unwrap();
    let runs = 300;
    let fwd: Vec<f64> = (0..runs)
        .map(|i| ds * bidir_mstp(&g, t, ell, &state_s, 200, &RandomStream::new(3, i)).unwrap().value)
        .collect();
    let bwd: Vec<f64> = (0..runs)
        .map(|i| dt * bidir_mstp(&g, s, ell, &state_t, 200, &RandomStream::new(4, i)).unwrap().value)
        .collect();
    let (m1, se1) = mean_and_se(&fwd);
    let (m2, se2) = mean_and_se(&bwd);
    let target = ds * exact_s[ell][t.index()];
    assert!((m1 - target).abs() <= 4.0 * se1 + 1e-12);
    assert!((m2 - target).abs() <= 4.0 * se2 + 1e-12);
}
