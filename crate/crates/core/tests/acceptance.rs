//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lded_diag::alignment::{pairwise_agreement, pearson, spearman};
use lded_diag::field_reduce::LabelVector;
use lded_diag::field_reduce::{
    mises_top_k_mean, peeq_fraction, u3_range, NodeFieldTable, NodeRow, ReductionConfig,
};
use lded_diag::proxy_eval::{proxy_matrix, ProxyConfig, PROXY_JUMP_MEAN};
use lded_diag::ranking::{rank, tradeoff_points, LabelSet, WeightVector};
use lded_diag::report::{RunReport, SCORE_CAVEAT};
use lded_diag::track_bench::{
    generate_all, generate_strategy, jump_sequence, StrategyKind, StrategyParams, TrackLayout,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Reference labels typed in by hand, independent of the bundled CSV.
const REFERENCE: [(&str, f64, f64, f64); 10] = [
    ("center_out", 203.481, 0.452, 99.997),
    ("odd_even_interlaced", 239.073, 0.897, 99.405),
    ("block_quarters", 301.565, 0.490, 99.406),
    ("greedy_maximin", 252.768, 0.824, 99.607),
    ("multilag_jump", 337.045, 0.491, 99.059),
    ("center_edge", 371.445, 0.554, 98.482),
    ("edge_in", 407.721, 0.276, 98.558),
    ("raster_left_to_right", 194.164, 1.607, 99.361),
    ("windowed_dispersion", 307.889, 0.507, 99.912),
    ("smartscan_proxy", 353.251, 0.527, 99.268),
];

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn lib<T>(r: lded_diag::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(
        elapsed < limit,
        format!("{what} took {elapsed:?}, limit {limit:?}"),
    )
}

fn reference_set() -> LabelSet {
    LabelSet::reference()
}

fn c1_corner_weights() -> Outcome {
    let start = Instant::now();
    let set = reference_set();
    let by_mises = lib(rank(&set, &lib(WeightVector::new(1.0, 0.0, 0.0))?))?;
    let by_u3 = lib(rank(&set, &lib(WeightVector::new(0.0, 1.0, 0.0))?))?;
    within(start.elapsed(), Duration::from_secs(1), "corner ranking")?;
    ensure(
        by_mises.entries[0].strategy_id == "raster_left_to_right",
        format!(
            "mises corner ranked {} first",
            by_mises.entries[0].strategy_id
        ),
    )?;
    ensure(
        by_u3.entries[0].strategy_id == "edge_in",
        format!("u3 corner ranked {} first", by_u3.entries[0].strategy_id),
    )?;
    // full corner orders equal the raw column sort
    for (col, result) in [(0usize, &by_mises), (1, &by_u3)] {
        let mut rows = REFERENCE.to_vec();
        rows.sort_by(|a, b| {
            let (x, y) = if col == 0 { (a.1, b.1) } else { (a.2, b.2) };
            x.total_cmp(&y).then(a.0.cmp(b.0))
        });
        let want: Vec<&str> = rows.iter().map(|r| r.0).collect();
        ensure(
            result.order() == want,
            format!("column {col} order {:?}", result.order()),
        )?;
    }
    Ok(format!(
        "raster first on mises, edge_in first on u3 ({:?})",
        start.elapsed()
    ))
}

fn c2_compromise() -> Outcome {
    // oracle: min-max each column by hand, score = 0.5 s + 0.5 u
    let col = |f: fn(&(&str, f64, f64, f64)) -> f64| {
        let v: Vec<f64> = REFERENCE.iter().map(f).collect();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        v.into_iter()
            .map(|x| (x - lo) / (hi - lo))
            .collect::<Vec<_>>()
    };
    let s = col(|r| r.1);
    let u = col(|r| r.2);
    let mut oracle: Vec<(&str, f64)> = REFERENCE
        .iter()
        .enumerate()
        .map(|(i, r)| (r.0, 0.5 * s[i] + 0.5 * u[i]))
        .collect();
    oracle.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));

    let result = lib(rank(
        &reference_set(),
        &lib(WeightVector::new(0.5, 0.5, 0.0))?,
    ))?;
    let got = result.order();
    let want: Vec<&str> = oracle.iter().map(|r| r.0).collect();
    ensure(got == want, format!("order {got:?} != oracle {want:?}"))?;
    for (e, (_, score)) in result.entries.iter().zip(&oracle) {
        ensure(
            (e.score - score).abs() < 1e-12,
            format!("{} score {} vs {}", e.strategy_id, e.score, score),
        )?;
    }
    ensure(got[0] == "center_out", format!("rank 1 is {}", got[0]))?;
    Ok(format!("center_out rank 1, score {:.6}", oracle[0].1))
}

fn c3_pareto() -> Outcome {
    let points = tradeoff_points(&reference_set());
    let pairs = REFERENCE.len() * (REFERENCE.len() - 1) / 2;
    for a in &REFERENCE {
        let dominated = REFERENCE
            .iter()
            .any(|b| b.0 != a.0 && b.1 <= a.1 && b.2 <= a.2 && (b.1 < a.1 || b.2 < a.2));
        let p = points
            .iter()
            .find(|p| p.strategy_id == a.0)
            .ok_or(format!("{} missing from tradeoff points", a.0))?;
        ensure(
            p.dominated == dominated,
            format!("{} dominated={} oracle={}", a.0, p.dominated, dominated),
        )?;
    }
    let flag = |id: &str| {
        points
            .iter()
            .find(|p| p.strategy_id == id)
            .map(|p| p.dominated)
    };
    ensure(
        flag("raster_left_to_right") == Some(false),
        "raster should be non-dominated",
    )?;
    ensure(
        flag("edge_in") == Some(false),
        "edge_in should be non-dominated",
    )?;
    ensure(
        flag("smartscan_proxy") == Some(true),
        "smartscan_proxy should be dominated",
    )?;
    let (co, ss) = (REFERENCE[0], REFERENCE[9]);
    ensure(
        co.1 < ss.1 && co.2 < ss.2,
        "center_out should dominate smartscan_proxy",
    )?;
    Ok(format!("flags match brute force over {pairs} pairs"))
}

fn c4_score_caveat() -> Outcome {
    let run = lib(lded_diag::pipeline::run_pipeline(
        &Default::default(),
        &lded_diag::pipeline::LabelSource::Bundled,
    ))?;
    ensure(
        run.report
            .meta
            .disclaimers
            .iter()
            .any(|d| d == SCORE_CAVEAT),
        "score caveat missing from report disclaimers",
    )?;
    ensure(
        run.json.contains("not reproduced"),
        "caveat text missing from report JSON",
    )?;
    let fixture = include_str!("../fixtures/lded32_reference_labels.csv");
    ensure(
        fixture.contains("0.266"),
        "fixture should record the reference center_out score",
    )?;
    Ok("caveat present in report; rank properties substitute for score values".into())
}

fn c5_alignment_sign() -> Outcome {
    let start = Instant::now();
    let layout = lib(TrackLayout::new(32, 1.0))?;
    let orders = lib(generate_all(&layout))?;
    let matrix = lib(proxy_matrix(&orders, &layout, &ProxyConfig::default()))?;
    let ids: Vec<String> = orders.iter().map(|o| o.strategy_id.clone()).collect();
    let x = matrix
        .column(PROXY_JUMP_MEAN, &ids)
        .ok_or("jump mean column missing")?;
    let y: Vec<f64> = ids
        .iter()
        .map(|id| {
            REFERENCE
                .iter()
                .find(|r| r.0 == id)
                .map(|r| r.2)
                .ok_or(format!("no label for {id}"))
        })
        .collect::<Result<_, _>>()?;
    let r = lib(pearson(&x, &y))?;
    within(
        start.elapsed(),
        Duration::from_secs(1),
        "proxy evaluation and correlation",
    )?;
    ensure(r <= -0.3, format!("pearson {r:.4} is not <= -0.3"))?;
    Ok(format!("pearson(jump mean, u3) = {r:.4}"))
}

fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    let mut pairs = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += ((x[i] - x[j]) * (y[i] - y[j])).signum();
            pairs += 1.0;
        }
    }
    s / pairs
}

fn distinct_values(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let mut s = v.clone();
        s.sort_by(f64::total_cmp);
        if s.windows(2).all(|w| w[0] != w[1]) {
            return v;
        }
    }
}

fn c6_kendall_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let m = rng.gen_range(3..=10);
        let x = distinct_values(&mut rng, m);
        let y = distinct_values(&mut rng, m);
        let got = lib(pairwise_agreement(&x, &y))?.agreement;
        let want = (kendall_tau(&x, &y) + 1.0) / 2.0;
        let err = (got - want).abs();
        worst = worst.max(err);
        ensure(
            err <= 1e-12,
            format!("case {case}: agreement {got} vs oracle {want}"),
        )?;
    }
    Ok(format!("1000 cases, max error {worst:e}"))
}

fn c7_statistic_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let transforms: [fn(f64) -> f64; 3] =
        [|v| v.exp() * 0.5, |v| 3.0 * v + 11.0, |v| v * v * v + v];
    for case in 0..500 {
        let m = rng.gen_range(3..=12);
        // coarse values so ties occur
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-5..=5) as f64 * 0.5).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-5..=5) as f64 * 0.5).collect();
        let pa = lib(pairwise_agreement(&x, &y))?;
        ensure(
            pa.agreement + pa.mismatch == 1.0,
            format!("case {case}: agreement + mismatch != 1"),
        )?;

        let x_constant = x.iter().all(|v| *v == x[0]);
        let y_constant = y.iter().all(|v| *v == y[0]);
        for f in transforms {
            let fx: Vec<f64> = x.iter().map(|v| f(*v)).collect();
            let pf = lib(pairwise_agreement(&fx, &y))?;
            ensure(
                (pf.agreement - pa.agreement).abs() <= 1e-12,
                format!("case {case}: agreement changed under increasing transform"),
            )?;
            if !x_constant && !y_constant {
                let s0 = lib(spearman(&x, &y))?;
                let s1 = lib(spearman(&fx, &y))?;
                ensure(
                    (s0 - s1).abs() <= 1e-12,
                    format!("case {case}: spearman {s0} vs {s1}"),
                )?;
            }
        }
        if !x_constant {
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let p_same = lib(pearson(&x, &x))?;
            let p_neg = lib(pearson(&x, &neg))?;
            ensure(
                p_same == 1.0,
                format!("case {case}: pearson(x,x) = {p_same}"),
            )?;
            ensure(
                p_neg == -1.0,
                format!("case {case}: pearson(x,-x) = {p_neg}"),
            )?;
        }
    }
    Ok("500 cases with ties".into())
}

fn random_table(rng: &mut ChaCha8Rng) -> Vec<NodeRow> {
    let n = rng.gen_range(1..=200);
    (0..n)
        .map(|i| NodeRow {
            node_id: i as i64 * 3 + 1,
            mises: if rng.gen_bool(0.1) {
                250.0
            } else {
                rng.gen_range(0.0..500.0)
            },
            u3: rng.gen_range(-1.0..1.0),
            peeq: if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.0..0.05)
            },
            in_scan_region: rng.gen_bool(0.8),
            bc_dominated: rng.gen_bool(0.15),
        })
        .collect()
}

fn oracle_labels(rows: &[NodeRow], k: usize, eps: f64) -> Option<(f64, f64, f64)> {
    let dom: Vec<&NodeRow> = rows
        .iter()
        .filter(|r| r.in_scan_region && !r.bc_dominated)
        .collect();
    if dom.len() < k {
        return None;
    }
    let mut m: Vec<f64> = dom.iter().map(|r| r.mises).collect();
    m.sort_by(|a, b| b.total_cmp(a));
    let mut sum = 0.0;
    for v in &m[..k] {
        sum += v;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut above = 0usize;
    for r in &dom {
        lo = lo.min(r.u3);
        hi = hi.max(r.u3);
        if r.peeq > eps {
            above += 1;
        }
    }
    Some((
        sum / k as f64,
        hi - lo,
        100.0 * above as f64 / dom.len() as f64,
    ))
}

fn c8_field_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut evaluated = 0;
    for case in 0..500 {
        let rows = random_table(&mut rng);
        let k = rng.gen_range(1..=8);
        let eps = if rng.gen_bool(0.5) {
            0.0
        } else {
            rng.gen_range(0.0..0.05)
        };
        let cfg = ReductionConfig {
            top_k: k,
            peeq_threshold: eps,
        };
        let table = lib(NodeFieldTable::new(rows.clone()))?;
        match oracle_labels(&rows, k, eps) {
            None => {
                ensure(
                    mises_top_k_mean(&table, &cfg).is_err(),
                    format!("case {case}: expected domain error"),
                )?;
                continue;
            }
            Some((m, u, p)) => {
                evaluated += 1;
                ensure(
                    lib(mises_top_k_mean(&table, &cfg))? == m,
                    format!("case {case}: mises mismatch"),
                )?;
                ensure(
                    lib(u3_range(&table))? == u,
                    format!("case {case}: u3 mismatch"),
                )?;
                ensure(
                    lib(peeq_fraction(&table, &cfg))? == p,
                    format!("case {case}: peeq mismatch"),
                )?;
            }
        }

        // exclusion monotonicity: flagging a node equals deleting it
        let candidates: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].in_domain()).collect();
        if let Some(&i) = candidates.first() {
            let mut flagged = rows.clone();
            flagged[i].bc_dominated = true;
            let mut deleted = rows.clone();
            deleted.remove(i);
            let a = NodeFieldTable::new(flagged).map_err(|e| e.to_string())?;
            let b = NodeFieldTable::new(deleted).map_err(|e| e.to_string())?;
            let la = lded_diag::field_reduce::extract_labels(&a, &cfg).ok();
            let lb = lded_diag::field_reduce::extract_labels(&b, &cfg).ok();
            ensure(
                la == lb,
                format!("case {case}: flagging differs from deletion"),
            )?;
        }

        // threshold monotonicity
        let mut prev = f64::INFINITY;
        for eps in [0.0, 0.005, 0.01, 0.02, 0.04, 0.06] {
            let c = ReductionConfig {
                top_k: k,
                peeq_threshold: eps,
            };
            let p = lib(peeq_fraction(&table, &c))?;
            ensure(
                p <= prev,
                format!("case {case}: peeq fraction rose at threshold {eps}"),
            )?;
            prev = p;
        }
    }
    Ok(format!("500 tables, {evaluated} with a full top-k domain"))
}

fn c9_generators() -> Outcome {
    for n in [4usize, 8, 16, 32] {
        let layout = lib(TrackLayout::new(n, 1.0))?;
        for kind in StrategyKind::all(&StrategyParams::default()) {
            let o = lib(generate_strategy(kind, &layout))?;
            let mut sorted = o.order.clone();
            sorted.sort_unstable();
            ensure(
                sorted == (0..n).collect::<Vec<_>>(),
                format!("{} at N={n} is not a permutation", o.strategy_id),
            )?;
        }
    }
    let layout = lib(TrackLayout::new(32, 1.0))?;
    let orders = lib(generate_all(&layout))?;
    ensure(orders.len() == 10, "expected ten strategies")?;
    for i in 0..orders.len() {
        for j in i + 1..orders.len() {
            ensure(
                orders[i].order != orders[j].order,
                format!("{} equals {}", orders[i].strategy_id, orders[j].strategy_id),
            )?;
        }
    }
    let raster = orders
        .iter()
        .find(|o| o.strategy_id == "raster_left_to_right")
        .ok_or("raster missing")?;
    ensure(
        raster.order == (0..32).collect::<Vec<_>>(),
        "raster is not the identity",
    )?;
    let edge = orders
        .iter()
        .find(|o| o.strategy_id == "edge_in")
        .ok_or("edge_in missing")?;
    let jumps = jump_sequence(edge, &layout);
    let mean = jumps.iter().sum::<f64>() / jumps.len() as f64;
    ensure(mean == 496.0 / 31.0, format!("edge_in jump mean {mean}"))?;
    ensure(
        (mean - 16.0).abs() < 1e-12,
        format!("edge_in jump mean {mean} != 16"),
    )?;
    Ok("permutations at N in {4,8,16,32}; ten distinct at 32; edge_in jump mean 16".into())
}

fn c10_ranking_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for set_no in 0..100 {
        let set: LabelSet = (0..10)
            .map(|i| {
                (
                    format!("s{i}"),
                    LabelVector {
                        mises_top_k_mean: rng.gen_range(100.0..500.0),
                        u3_range: rng.gen_range(0.1..2.0),
                        peeq_fraction: rng.gen_range(90.0..100.0),
                    },
                )
            })
            .collect();
        let col = rng.gen_range(0..3);
        let a = rng.gen_range(0.1..10.0);
        let b = rng.gen_range(0.0..50.0);
        let mapped: LabelSet = set
            .iter()
            .map(|(id, l)| {
                let mut v = *l;
                match col {
                    0 => v.mises_top_k_mean = a * v.mises_top_k_mean + b,
                    1 => v.u3_range = a * v.u3_range + b,
                    _ => v.peeq_fraction = (a * v.peeq_fraction + b) / (a * 100.0 + b) * 100.0,
                }
                (id.clone(), v)
            })
            .collect();
        for _ in 0..20 {
            let raw: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let total: f64 = raw.iter().sum();
            let w = lib(WeightVector::new(
                raw[0] / total,
                raw[1] / total,
                raw[2] / total,
            ))?;
            let r0 = lib(rank(&set, &w))?;
            let r1 = lib(rank(&mapped, &w))?;
            ensure(
                r0.order() == r1.order(),
                format!("set {set_no}: ordering changed after affine map of column {col}"),
            )?;
        }
    }
    Ok("100 sets x 20 weightings".into())
}

fn run_pipeline_cli(dir: &Path) -> Result<Duration, String> {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_lded-diag"))
        .arg("pipeline")
        .arg("--out")
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(
        status.status.success(),
        format!(
            "pipeline failed: {}",
            String::from_utf8_lossy(&status.stderr)
        ),
    )?;
    Ok(elapsed)
}

fn c11_determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ta = run_pipeline_cli(a.path())?;
    let tb = run_pipeline_cli(b.path())?;
    within(ta.max(tb), Duration::from_secs(10), "pipeline")?;
    for name in [
        "report.json",
        "tradeoff.svg",
        "robustness.svg",
        "agreement.svg",
    ] {
        let x = std::fs::read(a.path().join(name)).map_err(|e| format!("{name}: {e}"))?;
        let y = std::fs::read(b.path().join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(
            !x.is_empty() && x == y,
            format!("{name} differs between runs"),
        )?;
    }
    let text = std::fs::read_to_string(a.path().join("report.json")).map_err(|e| e.to_string())?;
    lib(RunReport::from_json(&text))?;
    Ok(format!(
        "four outputs byte-identical; runs took {ta:?} and {tb:?}"
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("corner-weight ranking", c1_corner_weights),
        ("compromise candidate", c2_compromise),
        ("pareto structure", c3_pareto),
        ("score-column caveat", c4_score_caveat),
        ("alignment sign anchor", c5_alignment_sign),
        ("pairwise agreement vs kendall", c6_kendall_oracle),
        ("statistic invariants", c7_statistic_invariants),
        ("field-reduction oracle", c8_field_reduction),
        ("generator invariants", c9_generators),
        ("ranking invariance", c10_ranking_invariance),
        ("end-to-end determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
