use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::time::Instant;

use bippr::exact::{exact_global_pagerank, exact_mstp, exact_ppr};
use bippr::mstp::{DiffusionEstimate, WalkSharing};
use bippr::{
    approximate_pagerank, chernoff_c, choose_r_max, estimate_diffusion, estimate_ppr, mc_estimate, mc_num_walks,
    num_walks, significance_delta, BipprConfig, DiffusionFamily, Graph, NodeId, PprEstimate, PreparedSource,
    PushResult, RandomStream,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::report::{num, CliError, Table};
use crate::{
    AccuracyArgs, BenchArgs, Delta, DiffusionArgs, EstimateArgs, Estimator, ExactArgs, Family, Format, GraphArgs,
};

type CmdResult = Result<String, CliError>;

const PPR_NODE_CAP: usize = 100_000;
const MSTP_NODE_CAP: usize = 10_000;
const ORACLE_TOL: f64 = 1e-12;

fn load_graph(args: &GraphArgs) -> Result<Graph, CliError> {
    let file = File::open(&args.graph).map_err(|e| CliError::Io(format!("{}: {e}", args.graph.display())))?;
    Ok(Graph::load_edge_list(BufReader::new(file), args.weighted)?)
}

fn node(g: &Graph, label: &str) -> Result<NodeId, CliError> {
    g.node_by_label(label).ok_or_else(|| CliError::Input(format!("unknown node label {label:?}")))
}

fn walkable(g: &Graph, label: &str) -> Result<NodeId, CliError> {
    let v = node(g, label)?;
    g.check_walkable(v)?;
    Ok(v)
}

fn resolve_delta(g: &Graph, delta: Delta, t: NodeId) -> Result<f64, CliError> {
    match delta {
        Delta::Auto => Ok(significance_delta(g, t)?),
        Delta::Value(v) => Ok(v),
    }
}

fn config(acc: &AccuracyArgs, delta: f64) -> BipprConfig {
    BipprConfig { alpha: acc.alpha, delta, eps: acc.eps, p_fail: acc.p_fail, c: acc.c, r_max: acc.r_max }
}

fn finish_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("record serializes");
    s.push('\n');
    s
}

/// Flattens a JSON object into a two-row CSV of dotted keys.
fn json_to_csv(value: &Value) -> String {
    fn walk(prefix: &str, v: &Value, cols: &mut Vec<String>, cells: &mut Vec<Value>) {
        match v {
            Value::Object(map) => {
                for (k, inner) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, inner, cols, cells);
                }
            }
            Value::Array(_) => {
                cols.push(prefix.to_string());
                cells.push(Value::String(v.to_string()));
            }
            other => {
                cols.push(prefix.to_string());
                cells.push(other.clone());
            }
        }
    }
    let mut cols = Vec::new();
    let mut cells = Vec::new();
    walk("", value, &mut cols, &mut cells);
    let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut table = Table::new(&refs);
    table.push(cells);
    table.to_csv()
}

fn render(value: &impl Serialize, format: Format) -> String {
    match format {
        Format::Json => finish_json(value),
        Format::Csv => json_to_csv(&serde_json::to_value(value).expect("record serializes")),
    }
}

#[derive(Serialize)]
struct ParamsRecord {
    alpha: f64,
    delta: f64,
    eps: f64,
    p_fail: f64,
    c: f64,
    r_max: Option<f64>,
    w: u64,
}

#[derive(Serialize)]
struct WorkRecord {
    push_count: u64,
    degree_work: f64,
    walk_steps: u64,
}

#[derive(Serialize)]
struct PushTrace {
    p: BTreeMap<String, f64>,
    r: BTreeMap<String, f64>,
    push_count: u64,
    degree_work: f64,
}

impl PushTrace {
    fn new(g: &Graph, push: &PushResult) -> Self {
        let labelled = |v: &bippr::SparseVector| v.iter().map(|(n, x)| (g.label(n).to_string(), x)).collect();
        Self { p: labelled(&push.p), r: labelled(&push.r), push_count: push.push_count, degree_work: push.degree_work }
    }
}

#[derive(Serialize)]
struct EstimateRecord {
    source: String,
    target: String,
    estimator: &'static str,
    estimate: f64,
    push_term: f64,
    walk_term: f64,
    params: ParamsRecord,
    work: WorkRecord,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    push_trace: Option<PushTrace>,
}

pub fn estimate(args: &EstimateArgs) -> CmdResult {
    let g = load_graph(&args.graph)?;
    let s = walkable(&g, &args.source)?;
    let t = node(&g, &args.target)?;
    let acc = &args.accuracy;
    let delta = resolve_delta(&g, acc.delta, t)?;
    let rng = RandomStream::new(acc.seed, 0);

    let (est, params, trace) = match args.estimator {
        Estimator::Bippr => {
            g.check_walkable(t)?;
            let mut resolved = config(acc, delta).resolve(g.degree(t)?)?;
            if let Some(w) = args.walks {
                resolved.walks = w;
            }
            let prepared = PreparedSource::new(&g, s, resolved.alpha, resolved.r_max)?;
            let est = prepared.query_with(t, resolved, &rng)?;
            let trace = args.trace_push.then(|| PushTrace::new(&g, prepared.push()));
            let p = ParamsRecord {
                alpha: resolved.alpha,
                delta,
                eps: resolved.eps,
                p_fail: resolved.p_fail,
                c: resolved.c,
                r_max: Some(resolved.r_max),
                w: resolved.walks,
            };
            (est, p, trace)
        }
        Estimator::Mc => {
            let (c, w) = mc_walks(acc, delta)?;
            let w = args.walks.unwrap_or(w);
            let est = mc_estimate(&g, s, t, acc.alpha, w, &rng)?;
            let p = ParamsRecord { alpha: acc.alpha, delta, eps: acc.eps, p_fail: acc.p_fail, c, r_max: None, w };
            (est, p, None)
        }
        other => return Err(CliError::Input(format!("estimate supports bippr and mc, not {other:?}"))),
    };

    let record = EstimateRecord {
        source: args.source.clone(),
        target: args.target.clone(),
        estimator: if params.r_max.is_some() { "bippr" } else { "mc" },
        estimate: est.value,
        push_term: est.push_term,
        walk_term: est.walk_term,
        params,
        work: WorkRecord { push_count: est.push_count, degree_work: est.push_work, walk_steps: est.walk_steps },
        seed: acc.seed,
        push_trace: trace,
    };
    Ok(render(&record, args.format))
}

/// Chernoff constant and Monte Carlo walk count `ceil(c / (eps^2 delta))`.
fn mc_walks(acc: &AccuracyArgs, delta: f64) -> Result<(f64, u64), CliError> {
    Ok(match acc.c {
        Some(c) => (c, (c / (acc.eps * acc.eps * delta)).ceil().max(1.0) as u64),
        None => (chernoff_c(acc.p_fail)?, mc_num_walks(delta, acc.eps, acc.p_fail)?),
    })
}

pub fn exact(args: &ExactArgs) -> CmdResult {
    let g = load_graph(&args.graph)?;
    let cap = args.max_nodes.unwrap_or(if args.ell.is_some() { MSTP_NODE_CAP } else { PPR_NODE_CAP });
    if g.node_count() > cap {
        return Err(CliError::Guard(format!("graph has {} nodes, over the oracle cap of {cap}", g.node_count())));
    }
    let s = walkable(&g, &args.source)?;
    let values = match args.ell {
        Some(ell) => exact_mstp(&g, s, ell)?.pop().expect("ell + 1 levels"),
        None => exact_ppr(&g, args.alpha, s, args.tol)?,
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut table = Table::new(&["node", "value"]);
    for i in order {
        table.push(vec![json!(g.label(NodeId::from(i))), num(values[i])]);
    }
    Ok(match args.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    })
}

const BENCH_COLUMNS: &[&str] = &[
    "trial",
    "estimator",
    "source",
    "target",
    "delta",
    "true_value",
    "estimate",
    "abs_error",
    "rel_error",
    "bound",
    "violation",
    "push_count",
    "degree_work",
    "walks",
    "walk_steps",
    "total_work",
    "violation_rate",
    "mean_total_work",
    "work_ratio_vs_bippr",
];

#[derive(Default)]
struct Summary {
    runs: usize,
    checked: usize,
    violations: usize,
    total_work: f64,
}

fn pick_pairs(g: &Graph, args: &BenchArgs) -> Result<Vec<(NodeId, NodeId)>, CliError> {
    if let (Some(s), Some(t)) = (&args.source, &args.target) {
        return Ok(vec![(walkable(g, s)?, walkable(g, t)?)]);
    }
    let live: Vec<NodeId> = g.nodes().filter(|&v| g.degrees()[v.index()] > 0.0).collect();
    if live.is_empty() {
        return Err(CliError::Input("graph has no edges".into()));
    }
    let mut rng = RandomStream::new(args.accuracy.seed, u64::MAX);
    Ok((0..args.pairs).map(|_| (live[rng.below(live.len())], live[rng.below(live.len())])).collect())
}

pub fn bench(args: &BenchArgs) -> CmdResult {
    if args.trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    let g = load_graph(&args.graph)?;
    let acc = &args.accuracy;
    let pairs = pick_pairs(&g, args)?;
    let estimators: Vec<Estimator> = match args.estimator {
        Estimator::All => vec![Estimator::Bippr, Estimator::Mc, Estimator::Push],
        e => vec![e],
    };
    let oracle = g.node_count() <= args.max_nodes;
    let global = if oracle && estimators.contains(&Estimator::Push) {
        Some(exact_global_pagerank(&g, acc.alpha, ORACLE_TOL)?)
    } else {
        None
    };

    let mut columns: Vec<&str> = BENCH_COLUMNS.to_vec();
    if args.wall_time {
        columns.push("wall_ms");
    }
    let mut table = Table::new(&columns);
    let mut summaries: Vec<Summary> = estimators.iter().map(|_| Summary::default()).collect();
    let root = RandomStream::new(acc.seed, 0);

    for (pi, &(s, t)) in pairs.iter().enumerate() {
        let delta = resolve_delta(&g, acc.delta, t)?;
        let cfg = config(acc, delta);
        let params = cfg.resolve(g.degree(t)?)?;
        let truth = if oracle { Some(exact_ppr(&g, acc.alpha, s, ORACLE_TOL)?[t.index()]) } else { None };
        let push_bound =
            global.as_ref().map(|gl| params.r_max * g.degrees()[t.index()] * g.node_count() as f64 * gl[t.index()]);

        for trial in 0..args.trials {
            for (ei, &estimator) in estimators.iter().enumerate() {
                let rng = root.derive(pi as u64).derive(trial as u64).derive(ei as u64);
                let clock = Instant::now();
                let (name, est, bound) = match estimator {
                    Estimator::Bippr => {
                        ("bippr", estimate_ppr(&g, s, t, &cfg, &rng)?, truth.map(|p| params.error_bound(p)))
                    }
                    Estimator::Mc => {
                        let (_, w) = mc_walks(acc, delta)?;
                        ("mc", mc_estimate(&g, s, t, acc.alpha, w, &rng)?, truth.map(|p| params.error_bound(p)))
                    }
                    Estimator::Push => {
                        let push = approximate_pagerank(&g, acc.alpha, s, params.r_max)?;
                        let value = push.p.get(t);
                        let est = PprEstimate {
                            source: s,
                            target: t,
                            value,
                            push_term: value,
                            walk_term: 0.0,
                            alpha: acc.alpha,
                            params: None,
                            walks: 0,
                            push_count: push.push_count,
                            push_work: push.degree_work,
                            walk_steps: 0,
                            d_t: g.degrees()[t.index()],
                        };
                        ("push", est, push_bound)
                    }
                    Estimator::All => unreachable!("expanded above"),
                };
                let wall_ms = clock.elapsed().as_secs_f64() * 1e3;

                let summary = &mut summaries[ei];
                summary.runs += 1;
                summary.total_work += est.total_work();
                let (abs_err, rel_err, violation) = match (truth, bound) {
                    (Some(p), Some(b)) => {
                        let err = (est.value - p).abs();
                        let violated = err > b;
                        summary.checked += 1;
                        summary.violations += violated as usize;
                        (num(err), if p > 0.0 { num(err / p) } else { Value::Null }, json!(violated))
                    }
                    (Some(p), None) => {
                        let err = (est.value - p).abs();
                        (num(err), if p > 0.0 { num(err / p) } else { Value::Null }, Value::Null)
                    }
                    _ => (Value::Null, Value::Null, Value::Null),
                };
                let mut row = vec![
                    json!(trial),
                    json!(name),
                    json!(g.label(s)),
                    json!(g.label(t)),
                    num(delta),
                    truth.map(num).unwrap_or(Value::Null),
                    num(est.value),
                    abs_err,
                    rel_err,
                    bound.map(num).unwrap_or(Value::Null),
                    violation,
                    json!(est.push_count),
                    num(est.push_work),
                    json!(est.walks),
                    json!(est.walk_steps),
                    num(est.total_work()),
                    Value::Null,
                    Value::Null,
                    Value::Null,
                ];
                if args.wall_time {
                    row.push(num(wall_ms));
                }
                table.push(row);
            }
        }
    }

    let bippr_work = estimators
        .iter()
        .position(|&e| e == Estimator::Bippr)
        .map(|i| summaries[i].total_work / summaries[i].runs as f64);
    for (estimator, summary) in estimators.iter().zip(&summaries) {
        let name = match estimator {
            Estimator::Bippr => "bippr",
            Estimator::Mc => "mc",
            Estimator::Push => "push",
            Estimator::All => unreachable!(),
        };
        let mean_work = summary.total_work / summary.runs as f64;
        let rate =
            if summary.checked > 0 { num(summary.violations as f64 / summary.checked as f64) } else { Value::Null };
        let ratio = bippr_work.filter(|&b| b > 0.0).map(|b| num(mean_work / b)).unwrap_or(Value::Null);
        let mut row = vec![json!("summary"), json!(name), json!("*"), json!("*")];
        row.extend(std::iter::repeat_n(Value::Null, 12));
        row.extend([rate, num(mean_work), ratio]);
        if args.wall_time {
            row.push(Value::Null);
        }
        table.push(row);
    }

    Ok(match args.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    })
}

#[derive(Serialize)]
struct LevelRecord {
    ell: usize,
    alpha_ell: f64,
    estimate: f64,
}

#[derive(Serialize)]
struct DiffusionRecord {
    source: String,
    target: String,
    family: &'static str,
    value: f64,
    trunc_bound: f64,
    ell_max: usize,
    per_level: Vec<LevelRecord>,
    params: DiffusionParams,
    work: WorkRecord,
    seed: u64,
}

#[derive(Serialize)]
struct DiffusionParams {
    alpha: Option<f64>,
    gamma: Option<f64>,
    trunc_tol: f64,
    delta: f64,
    eps: f64,
    p_fail: f64,
    c: f64,
    r_max: f64,
    walks_per_level: u64,
    independent_levels: bool,
}

pub fn diffusion(args: &DiffusionArgs) -> CmdResult {
    let g = load_graph(&args.graph)?;
    let s = walkable(&g, &args.source)?;
    let t = walkable(&g, &args.target)?;
    let acc = &args.accuracy;
    let (family, name) = match args.family {
        Family::Pagerank => (DiffusionFamily::PageRank { alpha: acc.alpha }, "pagerank"),
        Family::HeatKernel => (DiffusionFamily::HeatKernel { gamma: args.gamma }, "heat-kernel"),
    };
    let ell_max = family.choose_ell_max(args.trunc_tol)?;
    let weights = family.weights(ell_max)?;

    let delta = resolve_delta(&g, acc.delta, t)?;
    let d_t = g.degree(t)?;
    let c = match acc.c {
        Some(c) => c,
        None => chernoff_c(acc.p_fail)?,
    };
    let r_max = match acc.r_max {
        Some(r) => r,
        None => choose_r_max(acc.eps, delta, d_t, acc.p_fail)?,
    };
    let walks = match args.walks {
        Some(w) => w,
        None => num_walks(c, d_t, r_max, acc.eps, delta)?,
    };
    let sharing = if args.independent_levels { WalkSharing::Independent } else { WalkSharing::Shared };
    let est: DiffusionEstimate =
        estimate_diffusion(&g, s, t, &weights, r_max, walks, sharing, &RandomStream::new(acc.seed, 0))?;

    let record = DiffusionRecord {
        source: args.source.clone(),
        target: args.target.clone(),
        family: name,
        value: est.value,
        trunc_bound: est.trunc_bound,
        ell_max: est.ell_max,
        per_level: est
            .per_level
            .iter()
            .map(|l| LevelRecord { ell: l.ell, alpha_ell: l.alpha_ell, estimate: l.estimate })
            .collect(),
        params: DiffusionParams {
            alpha: matches!(args.family, Family::Pagerank).then_some(acc.alpha),
            gamma: matches!(args.family, Family::HeatKernel).then_some(args.gamma),
            trunc_tol: args.trunc_tol,
            delta,
            eps: acc.eps,
            p_fail: acc.p_fail,
            c,
            r_max,
            walks_per_level: walks,
            independent_levels: args.independent_levels,
        },
        work: WorkRecord { push_count: est.push_count, degree_work: est.push_work, walk_steps: est.walk_steps },
        seed: acc.seed,
    };
    Ok(render(&record, args.format))
}

#[derive(Serialize)]
struct ValidateRecord {
    ok: bool,
    n: usize,
    m: usize,
    total_weight: f64,
    degree_sum: f64,
    self_loop_weight: f64,
    isolated: usize,
    asymmetric_entries: usize,
    nonpositive_weights: usize,
    degree_sum_ok: bool,
    unit_weights: bool,
}

pub fn validate(args: &GraphArgs) -> CmdResult {
    let g = load_graph(args)?;
    let r = g.validate();
    let record = ValidateRecord {
        ok: r.is_ok(),
        n: r.n,
        m: r.m,
        total_weight: r.total_weight,
        degree_sum: r.degree_sum,
        self_loop_weight: r.self_loop_weight,
        isolated: r.isolated,
        asymmetric_entries: r.asymmetric_entries,
        nonpositive_weights: r.nonpositive_weights,
        degree_sum_ok: r.degree_sum_ok,
        unit_weights: g.has_unit_weights(),
    };
    if !record.ok {
        return Err(CliError::Io(format!("graph failed validation: {}", finish_json(&record))));
    }
    Ok(finish_json(&record))
}
