//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a subset.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use indexmap::IndexMap;
use rand::Rng;

use digitwise::engagement_model::{
    bin10_accuracy, binary_at_threshold, evaluate_horizons, parse_horizons, quit50_pcc, threshold_sweep, DEFAULT_HORIZONS,
};
use digitwise::event_store::{group_sessions, EventType};
use digitwise::learner::{fit_gbdt, fit_tree, halving_search, FeatureMatrix, GbdtConfig, HalvingConfig, SearchSpace, TreeConfig, TreeNode};
use digitwise::pipeline::{candidate_features, clean, compress, compress_sessions, engineer, select_features, CleanConfig, RULES};
use digitwise::synth_oracle::{dominant_family, generate, latent_cosine, Archetype, GroundTruthUser, SynthConfig};
use digitwise::twin_registry::SensitivityDb;
use digitwise::whatif::{format_table, run_whatif, abr_grid_scenarios, AbrPolicy, BandwidthTrace, Cohort, TraceLibrary, TraceStep, WhatIfScenario};
use digitwise::workflow::{process, train, train_twin_db, Processed, WorkflowConfig};
use digitwise::rng;

use common::{brute_force_root_split, event, rmse_by_round, rule_violation_corpus};

type Check = fn() -> Result<String, String>;
type Hetero = (Processed, SensitivityDb, Vec<String>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn mix(entries: &[(Archetype, f64)]) -> IndexMap<Archetype, f64> {
    entries.iter().copied().collect()
}

struct Population {
    users: Vec<GroundTruthUser>,
    processed: Processed,
}

fn population(cfg: &SynthConfig, wf: &WorkflowConfig) -> Result<Population, String> {
    let corpus = generate(cfg).map_err(|e| e.to_string())?;
    let processed = process(group_sessions(corpus.events), wf).map_err(|e| e.to_string())?;
    Ok(Population { users: corpus.users, processed })
}

// 1 ------------------------------------------------------------------------

fn tree_split_oracle() -> Result<String, String> {
    let mut exact = 0;
    for case in 0..50u64 {
        let mut r = rng::stream(1234, &[case]);
        let n = r.random_range(4..=32);
        let d = r.random_range(1..=3);
        // half of the fixtures use coarse integer values so ties are common
        let coarse = case % 2 == 0;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| if coarse { r.random_range(0..5) as f64 } else { r.random::<f64>() }).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| if coarse { r.random_range(0..3) as f64 } else { r.random::<f64>() }).collect();
        let x = FeatureMatrix::from_rows((0..d).map(|i| format!("f{i}")).collect(), &rows).unwrap();
        let g: Vec<f64> = y.iter().map(|v| -v).collect();
        let h = vec![1.0; n];
        let cfg = TreeConfig { max_depth: 1, min_samples_leaf: 1, l2: 1.0, features_per_split: None };
        let tree = fit_tree(&x, &g, &h, &cfg, case).map_err(|e| e.to_string())?;
        let oracle = brute_force_root_split(&x, &g, &h, 1.0, 1);
        match (&tree, oracle) {
            (TreeNode::Split { feature, threshold, .. }, Some(o)) => {
                ensure!(*feature == o.feature && *threshold == o.threshold, "fixture {case}: tree ({feature}, {threshold}) vs oracle {o:?}");
            }
            (TreeNode::Leaf { .. }, None) => {}
            (t, o) => return Err(format!("fixture {case}: tree {t:?} vs oracle {o:?}")),
        }
        exact += 1;
    }
    Ok(format!("{exact}/50 root splits match exhaustive search"))
}

// 2 ------------------------------------------------------------------------

fn boosting_monotonicity() -> Result<String, String> {
    type Target = fn(f64, f64) -> f64;
    let fixtures: [(&str, Target); 3] = [
        ("step", |a, _| if a < 0.5 { 0.2 } else { 0.8 }),
        ("smooth", |a, b| (3.0 * a).sin() * b + a * a),
        ("interaction", |a, b| if (a < 0.5) == (b < 0.5) { 1.0 } else { 0.0 }),
    ];
    let mut rounds = 0;
    for (name, f) in fixtures {
        for seed in 0..3u64 {
            let mut r = rng::stream(seed, &[rng::hash_str(name)]);
            let rows: Vec<Vec<f64>> = (0..150).map(|_| vec![r.random(), r.random(), r.random()]).collect();
            let y: Vec<f64> = rows.iter().map(|v| f(v[0], v[1]) + 0.05 * (r.random::<f64>() - 0.5)).collect();
            let x = FeatureMatrix::from_rows(vec!["a".into(), "b".into(), "c".into()], &rows).unwrap();
            let cfg = GbdtConfig { n_trees: 80, max_depth: 3, learning_rate: 0.3, colsample: 0.67, ..GbdtConfig::default() };
            let m = fit_gbdt(&x, &y, &cfg, seed).map_err(|e| e.to_string())?;
            let curve = rmse_by_round(&m, &x, &y);
            if let Some(k) = (1..curve.len()).find(|&k| curve[k] > curve[k - 1]) {
                return Err(format!("{name} seed {seed}: rmse rose at round {k}: {} -> {}", curve[k - 1], curve[k]));
            }
            rounds += curve.len() - 1;
        }
    }
    Ok(format!("{rounds} rounds over 9 fits, none increased training RMSE"))
}

// 3 ------------------------------------------------------------------------

fn sensitivity_recovery() -> Result<String, String> {
    let cfg = SynthConfig {
        n_users: 60,
        sessions_per_user: 300,
        seed: 3,
        mix: mix(&[(Archetype::StallSensitive, 0.5), (Archetype::BitrateSensitive, 0.5)]),
        ..SynthConfig::default()
    };
    let wf = WorkflowConfig { seed: 3, ..WorkflowConfig::default() };
    let pop = population(&cfg, &wf)?;
    let features = pop.processed.catalog.selected();
    let (_, db) = train_twin_db(&pop.processed.splits, &features, &wf).map_err(|e| e.to_string())?;
    let truth: BTreeMap<&str, &GroundTruthUser> = pop.users.iter().map(|u| (u.user_id.as_str(), u)).collect();
    let (mut hits, mut cos) = (0, 0.0);
    for v in db.vectors.values() {
        let u = truth[v.user_id.as_str()];
        hits += (dominant_family(&v.weights) == u.archetype.dominant()) as usize;
        cos += latent_cosine(u, &v.weights);
    }
    let n = db.len();
    ensure!(n >= 48, "only {n} of 60 users survived to twin training");
    let frac = hits as f64 / n as f64;
    let mean_cos = cos / n as f64;
    let detail = format!("argmax match {hits}/{n} = {frac:.3}, mean cosine {mean_cos:.3}, {} features", features.len());
    ensure!(frac >= 0.8 && mean_cos >= 0.7, "{detail}");
    Ok(detail)
}

// 4 and 5 -------------------------------------------------------------------

fn heterogeneous(seed: u64) -> (SynthConfig, WorkflowConfig) {
    let cfg = SynthConfig {
        n_users: 150,
        sessions_per_user: 200,
        seed,
        mix: mix(&[
            (Archetype::StallSensitive, 0.3),
            (Archetype::BitrateSensitive, 0.3),
            (Archetype::DurationSensitive, 0.2),
            (Archetype::PopularityDriven, 0.2),
        ]),
        ..SynthConfig::default()
    };
    (cfg, WorkflowConfig { seed, ..WorkflowConfig::default() })
}

static HETERO: OnceLock<Result<Hetero, String>> = OnceLock::new();

fn hetero_first_seed() -> Result<&'static Hetero, String> {
    HETERO
        .get_or_init(|| {
            let (cfg, wf) = heterogeneous(1);
            let pop = population(&cfg, &wf)?;
            let features = pop.processed.catalog.selected();
            let (_, db) = train_twin_db(&pop.processed.splits, &features, &wf).map_err(|e| e.to_string())?;
            Ok((pop.processed, db, features))
        })
        .as_ref()
        .map_err(Clone::clone)
}

fn augmented_beats_benchmark() -> Result<String, String> {
    let mut wins = 0;
    let mut parts = Vec::new();
    for seed in 1..=3u64 {
        let (cfg, wf) = heterogeneous(seed);
        let pop = population(&cfg, &wf)?;
        let t = train(&pop.processed, &wf).map_err(|e| e.to_string())?;
        let (a, b) = (t.augmented_eval.metrics.mae, t.benchmark_eval.metrics.mae);
        let gain = 1.0 - a / b;
        wins += (gain >= 0.03) as usize;
        parts.push(format!("seed {seed}: {a:.4} vs {b:.4} ({:+.1}%)", 100.0 * gain));
    }
    let detail = format!("{} ; {wins}/3 seeds at least 3% lower", parts.join(", "));
    ensure!(wins >= 2, "{detail}");
    Ok(detail)
}

fn horizon_improvement() -> Result<String, String> {
    let (p, db, features) = hetero_first_seed()?;
    let wf = WorkflowConfig { seed: 1, ..WorkflowConfig::default() };
    let horizons = parse_horizons(DEFAULT_HORIZONS).unwrap();
    let report = evaluate_horizons(&p.sessions, &p.splits, features, db, &horizons, &wf.tuning, 1).map_err(|e| e.to_string())?;
    let maes: Vec<f64> = report.horizons.iter().map(|h| h.augmented.metrics.mae).collect();
    let curve = report.horizons.iter().zip(&maes).map(|(h, m)| format!("{}={m:.4}", h.horizon)).collect::<Vec<_>>().join(" ");
    let at = |label: &str| report.horizons.iter().position(|h| h.horizon.to_string() == label).map(|i| maes[i]).unwrap();
    ensure!(at("10m") <= at("10s") - 0.01, "MAE at 10m not 0.01 below 10s: {curve}");
    if let Some(i) = (1..maes.len()).find(|&i| maes[i] > maes[i - 1] + 0.01) {
        return Err(format!("MAE rose by more than 0.01 at {}: {curve}", report.horizons[i].horizon));
    }
    Ok(curve)
}

// 6 ------------------------------------------------------------------------

fn cleaning_audit() -> Result<String, String> {
    let (_, report) = clean(rule_violation_corpus(), &CleanConfig::default());
    let mut expect_sessions: BTreeMap<String, usize> = RULES.iter().map(|r| (r.to_string(), 0)).collect();
    for (rule, n) in [("R2", 101), ("R3", 49), ("R4", 60), ("R6", 1), ("R7", 1), ("R8", 1), ("R9", 1), ("R10", 1), ("R11", 1)] {
        expect_sessions.insert(rule.into(), n);
    }
    let mut expect_users: BTreeMap<String, usize> = RULES.iter().map(|r| (r.to_string(), 0)).collect();
    for rule in ["R2", "R3", "R4"] {
        expect_users.insert(rule.into(), 1);
    }
    ensure!(report.sessions_removed_by_rule == expect_sessions, "sessions by rule {:?}", report.sessions_removed_by_rule);
    ensure!(report.users_removed_by_rule == expect_users, "users by rule {:?}", report.users_removed_by_rule);
    ensure!(report.repairs_by_rule["R1"] == 1 && report.repairs_by_rule["R5"] == 1, "repairs {:?}", report.repairs_by_rule);
    ensure!(report.sessions_out == 122, "{} sessions kept, expected 122", report.sessions_out);
    Ok("R1 and R5 repaired once; R2..R4 removed one user each; R6..R11 one session each".into())
}

// 7 ------------------------------------------------------------------------

fn stall_session(positions: &[f64]) -> Option<f64> {
    let mut ev = common::clean_session("u", "v", "s", common::T0);
    ev[1].videotime_end = Some(600.0);
    ev[1].event_duration = Some(600.0);
    ev[2].videotime_start = Some(600.0);
    ev[2].videotime_end = Some(600.0);
    for (i, &p) in positions.iter().enumerate() {
        let mut st = event("u", "v", "s", common::T0 + 2_000 + i as i64, EventType::Stall);
        st.videotime_start = Some(p);
        st.videotime_end = Some(p);
        st.event_duration = Some(2.0);
        ev.push(st);
    }
    ev.sort_by_key(|e| e.client_time);
    compress(&engineer(ev, 1)).and_then(|r| r.stall_duration_skew)
}

fn skewness_sign() -> Result<String, String> {
    let early = stall_session(&[5.0, 20.0, 40.0]).ok_or("early skew undefined")?;
    let late = stall_session(&[560.0, 580.0, 595.0]).ok_or("late skew undefined")?;
    let sym = stall_session(&[150.0, 300.0, 450.0]).ok_or("symmetric skew undefined")?;
    let detail = format!("early {early:.4}, late {late:.4}, symmetric {sym:.1e}");
    ensure!(early > 0.0 && late < 0.0 && sym.abs() <= 1e-12, "{detail}");
    Ok(detail)
}

// 8 ------------------------------------------------------------------------

fn feature_selection_properties() -> Result<String, String> {
    // (a) a duplicate of stall_count lowers stall_count's penalized importance
    let small = SynthConfig { n_users: 10, sessions_per_user: 100, seed: 8, ..SynthConfig::default() };
    let corpus = generate(&small).map_err(|e| e.to_string())?;
    let records = compress_sessions(&group_sessions(corpus.events));
    let mut dup = records.clone();
    for r in &mut dup {
        r.switch_count = r.stall_count;
    }
    let forest = WorkflowConfig::default().forest;
    let cands = candidate_features();
    let imp = |recs: &[digitwise::pipeline::SessionRecord]| -> Result<f64, String> {
        let c = select_features(recs, &cands, 0.0, &forest, 8).map_err(|e| e.to_string())?;
        Ok(c.features.iter().find(|f| f.name == "stall_count").unwrap().penalized_importance)
    };
    let (alone, with_dup) = (imp(&records)?, imp(&dup)?);
    ensure!(with_dup < alone, "duplicate did not lower importance: {with_dup} vs {alone}");

    // (b) and (c) threshold sweep
    let cfg = SynthConfig {
        n_users: 40,
        sessions_per_user: 200,
        seed: 8,
        mix: mix(&[
            (Archetype::StallSensitive, 0.3),
            (Archetype::BitrateSensitive, 0.3),
            (Archetype::DurationSensitive, 0.2),
            (Archetype::PopularityDriven, 0.2),
        ]),
        ..SynthConfig::default()
    };
    let wf = WorkflowConfig { seed: 8, ..WorkflowConfig::default() };
    let pop = population(&cfg, &wf)?;
    let extreme = pop.processed.catalog.max_penalized_importance();
    let thresholds = [0.0, 0.01, 0.02, 0.04, 0.08, extreme];
    let sweep = threshold_sweep(&pop.processed.catalog, &pop.processed.splits, &thresholds, &wf.tuning, 8);
    let counts: Vec<usize> = sweep.iter().map(|s| s.n_features).collect();
    ensure!(counts.windows(2).all(|w| w[1] <= w[0]), "feature counts not monotone: {counts:?}");
    let maes: Vec<Option<f64>> = sweep.iter().map(|s| s.test_mae).collect();
    let best = maes.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let at_extreme = maes.last().copied().flatten().ok_or("extreme threshold produced no model")?;
    let detail = format!(
        "stall_count importance {alone:.4} -> {with_dup:.4} with duplicate; counts {counts:?}; MAE {} ; extreme {at_extreme:.4} vs best {best:.4}",
        maes.iter().map(|m| m.map_or("-".into(), |v| format!("{v:.4}"))).collect::<Vec<_>>().join(",")
    );
    ensure!(at_extreme > best, "{detail}");
    Ok(detail)
}

// 9 ------------------------------------------------------------------------

fn halving_schedule() -> Result<String, String> {
    let make = |seed: u64, n: usize| {
        let mut r = rng::stream(seed, &[0x706c]);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random(), r.random()]).collect();
        let y: Vec<f64> =
            rows.iter().map(|v| (4.0 * v[0]).sin() * v[1] + (v[0] - 0.5).powi(2) + 0.01 * (r.random::<f64>() - 0.5)).collect();
        (FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &rows).unwrap(), y)
    };
    let space = SearchSpace {
        n_trees: vec![3, 150],
        max_depth: vec![1, 4],
        learning_rate: vec![0.02, 0.3],
        min_samples_leaf: vec![3],
        colsample: vec![1.0],
        l2_leaf_penalty: vec![1.0],
    };
    let planted = GbdtConfig { n_trees: 150, max_depth: 4, learning_rate: 0.3, min_samples_leaf: 3, colsample: 1.0, l2_leaf_penalty: 1.0 };
    let mut schedules = Vec::new();
    for seed in 0..3u64 {
        let (x, y) = make(seed, 800);
        let out = halving_search(&space, &x, &y, &HalvingConfig::default(), seed).map_err(|e| e.to_string())?;
        ensure!(out.rung_sizes() == [8, 4, 2, 1], "seed {seed}: rung sizes {:?}", out.rung_sizes());
        ensure!(out.best == planted, "seed {seed}: picked {:?}", out.best);
        schedules.push(format!("{:?}", out.rung_sizes()));
    }
    Ok(format!("rungs {} ; planted config won 3/3", schedules[0]))
}

// 10 -----------------------------------------------------------------------

fn stall_heavy_trace() -> BandwidthTrace {
    BandwidthTrace::new(
        "stall-heavy",
        vec![TraceStep { duration_s: 20.0, bandwidth_kbps: 6000.0 }, TraceStep { duration_s: 60.0, bandwidth_kbps: 200.0 }],
    )
    .unwrap()
}

fn whatif_ranking() -> Result<String, String> {
    let mut parts = Vec::new();
    let mut table = String::new();
    for seed in 1..=3u64 {
        let cfg = SynthConfig {
            n_users: 30,
            sessions_per_user: 160,
            seed: 100 + seed,
            mix: mix(&[(Archetype::StallSensitive, 0.7), (Archetype::BitrateSensitive, 0.3)]),
            ..SynthConfig::default()
        };
        let wf = WorkflowConfig { seed, ..WorkflowConfig::default() };
        let pop = population(&cfg, &wf)?;
        let t = train(&pop.processed, &wf).map_err(|e| e.to_string())?;
        let cohort: Vec<String> = pop
            .users
            .iter()
            .filter(|u| u.archetype == Archetype::StallSensitive && t.db.get(&u.user_id).is_some())
            .map(|u| u.user_id.clone())
            .collect();
        ensure!(!cohort.is_empty(), "seed {seed}: no stall-sensitive user has a twin");
        let mut traces = TraceLibrary::bundled();
        traces.insert(stall_heavy_trace());
        let base = WhatIfScenario { n_sessions: 3, ..WhatIfScenario::new(2.0, AbrPolicy::Hybrid, "constant-16", Cohort::Users(cohort), seed) };
        let heavy = WhatIfScenario { trace: "stall-heavy".into(), ..base.clone() };
        let res = run_whatif(&[base, heavy], &t.unified, &t.db, &traces).map_err(|e| e.to_string())?;
        let delta = res.deltas.iter().find(|d| d.from == 0 && d.to == 1).unwrap().mean_delta;
        parts.push(format!(
            "seed {seed}: {:.3} vs {:.3} (delta {delta:+.3}, {:.1} stalls/session)",
            res.scenarios[0].aggregates.mean, res.scenarios[1].aggregates.mean, res.scenarios[1].simulation.mean_stall_count
        ));
        ensure!(delta > 0.0, "{}", parts.join("; "));
        if seed == 1 {
            let grid = run_whatif(&abr_grid_scenarios(seed), &t.unified, &t.db, &traces).map_err(|e| e.to_string())?;
            ensure!(grid.scenarios.len() == 17, "table has {} rows", grid.scenarios.len());
            for s in &grid.scenarios {
                let a = &s.aggregates;
                ensure!(a.n == 100 && a.min <= a.median && a.median <= a.max && a.std >= 0.0, "bad aggregates in {}", s.label);
            }
            table = format_table(&grid);
        }
    }
    println!("{table}");
    Ok(format!("{} ; 17x5 table produced", parts.join("; ")))
}

// 11 -----------------------------------------------------------------------

fn metric_adapters() -> Result<String, String> {
    // bin10: 10 pairs; misses at 2 (0.29 vs 0.31), 5 (0.5 vs 0.49) and 8 (0.95 vs 0.85)
    let t = [0.05, 0.12, 0.29, 0.33, 0.47, 0.5, 0.61, 0.78, 0.95, 1.0];
    let p = [0.01, 0.19, 0.31, 0.39, 0.40, 0.49, 0.69, 0.71, 0.85, 0.93];
    let b10 = bin10_accuracy(&t, &p);
    ensure!(b10 == 0.7, "bin10 {b10}");
    // binary at 0.7 over 12 pairs; disagreements at 0.69/0.70, 0.75/0.65 and 0.2/0.9
    let t = [0.69, 0.75, 0.2, 0.1, 0.3, 0.8, 0.9, 0.71, 0.0, 1.0, 0.7, 0.5];
    let p = [0.70, 0.65, 0.9, 0.2, 0.6, 0.7, 0.95, 0.99, 0.3, 0.8, 0.7, 0.1];
    let b70 = binary_at_threshold(&t, &p, 0.7);
    ensure!(b70 == 9.0 / 12.0, "binary70 {b70}");
    // quit50 over 3 videos × 10 sessions: true low shares 0.2, 0.5, 0.8, predicted 0.3, 0.4, 0.9
    let (mut v, mut yt, mut yp) = (Vec::new(), Vec::new(), Vec::new());
    for (vid, lt, lp) in [("a", 2, 3), ("b", 5, 4), ("c", 8, 9)] {
        for i in 0..10 {
            v.push(vid.to_string());
            yt.push(if i < lt { 0.25 } else { 0.75 });
            yp.push(if i < lp { 0.4 } else { 0.6 });
        }
    }
    let pcc = quit50_pcc(&v, &yt, &yp, 10).ok_or("quit50 undefined")?;
    // hand value: 0.18 / sqrt(0.18 · 0.62/3)
    ensure!((pcc - 0.9332565252573827).abs() < 1e-12, "quit50 {pcc}");
    Ok(format!("bin10 {b10}, binary70 {b70}, quit50 {pcc:.10}"))
}

// 12 -----------------------------------------------------------------------

fn full_run(seed: u64) -> Result<String, String> {
    let cfg = SynthConfig {
        n_users: 20,
        sessions_per_user: 150,
        seed,
        mix: mix(&[(Archetype::StallSensitive, 0.4), (Archetype::BitrateSensitive, 0.3), (Archetype::Mixed, 0.3)]),
        ..SynthConfig::default()
    };
    let wf = WorkflowConfig { seed, ..WorkflowConfig::default() };
    let pop = population(&cfg, &wf)?;
    let t = train(&pop.processed, &wf).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let db_path = dir.path().join("sens.csv");
    t.db.store(&db_path).map_err(|e| e.to_string())?;
    let scen = vec![
        WhatIfScenario::new(2.0, AbrPolicy::Buffer, "cascade-5", Cohort::Random(10), seed),
        WhatIfScenario::new(2.0, AbrPolicy::Throughput, "lte-like", Cohort::Random(10), seed),
    ];
    let wi = run_whatif(&scen, &t.unified, &t.db, &TraceLibrary::bundled()).map_err(|e| e.to_string())?;
    let j = |v: &dyn erased::Json| v.json();
    Ok([
        j(&pop.processed.clean_report),
        j(&pop.processed.balance_report),
        j(&pop.processed.catalog),
        std::fs::read_to_string(&db_path).map_err(|e| e.to_string())?,
        j(&t.twins),
        j(&t.unified),
        j(&t.benchmark),
        j(&(&t.augmented_eval, &t.benchmark_eval)),
        j(&wi),
    ]
    .join("\n"))
}

mod erased {
    pub trait Json {
        fn json(&self) -> String;
    }
    impl<T: serde::Serialize> Json for T {
        fn json(&self) -> String {
            serde_json::to_string(self).expect("serializable")
        }
    }
}

fn determinism() -> Result<String, String> {
    let a = full_run(12)?;
    let b = full_run(12)?;
    ensure!(a == b, "reports differ between runs");
    Ok(format!("two runs produced identical reports ({} bytes)", a.len()))
}

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, f64, Check); 12] = [
        (1, "tree split matches brute force", 10.0, tree_split_oracle),
        (2, "boosting training RMSE non-increasing", 30.0, boosting_monotonicity),
        (3, "sensitivity recovery", 600.0, sensitivity_recovery),
        (4, "augmented model beats benchmark", 1200.0, augmented_beats_benchmark),
        (5, "MAE improves with horizon", 1800.0, horizon_improvement),
        (6, "cleaning rule audit", 5.0, cleaning_audit),
        (7, "stall skewness sign", 1.0, skewness_sign),
        (8, "feature selection properties", 600.0, feature_selection_properties),
        (9, "halving schedule and planted winner", 120.0, halving_schedule),
        (10, "what-if ranks smooth over stall-heavy", 900.0, whatif_ranking),
        (11, "metric adapters exact", 1.0, metric_adapters),
        (12, "end-to-end determinism", 1800.0, determinism),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(d) if secs > budget => Err(format!("{d} ; took {secs:.1}s, budget {budget}s")),
            o => o,
        };
        match outcome {
            Ok(d) => println!("PASS criterion {id:>2} ({name}): {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {id:>2} ({name}): {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
