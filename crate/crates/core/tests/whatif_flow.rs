use std::sync::OnceLock;

use digitwise::engagement_model::UnifiedModel;
use digitwise::event_store::group_sessions;
use digitwise::synth_oracle::{generate, SynthConfig};
use digitwise::twin_registry::SensitivityDb;
use digitwise::whatif::{run_whatif, AbrPolicy, Cohort, TraceLibrary, WhatIfScenario};
use digitwise::workflow::{process, train, WorkflowConfig};
use digitwise::Error;

fn trained() -> &'static (UnifiedModel, SensitivityDb) {
    static CELL: OnceLock<(UnifiedModel, SensitivityDb)> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = SynthConfig { n_users: 12, sessions_per_user: 150, seed: 41, ..SynthConfig::default() };
        let wf = WorkflowConfig { seed: 41, ..WorkflowConfig::default() };
        let p = process(group_sessions(generate(&cfg).unwrap().events), &wf).unwrap();
        let t = train(&p, &wf).unwrap();
        (t.unified, t.db)
    })
}

fn scenario(trace: &str) -> WhatIfScenario {
    WhatIfScenario { n_sessions: 2, ..WhatIfScenario::new(2.0, AbrPolicy::Buffer, trace, Cohort::Random(5), 9) }
}

#[test]
fn aggregates_match_recomputation() {
    let (model, db) = trained();
    let res = run_whatif(&[scenario("cascade-5")], model, db, &TraceLibrary::bundled()).unwrap();
    let s = &res.scenarios[0];
    let mut p: Vec<f64> = s.predictions.iter().map(|p| p.engagement).collect();
    assert_eq!(p.len(), 10);
    let n = p.len() as f64;
    let mean = p.iter().sum::<f64>() / n;
    let std = (p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    p.sort_by(f64::total_cmp);
    let a = &s.aggregates;
    assert!((a.mean - mean).abs() < 1e-12);
    assert!((a.std - std).abs() < 1e-12);
    assert_eq!((a.min, a.max), (p[0], p[9]));
    assert_eq!(a.median, (p[4] + p[5]) / 2.0);
    assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn identical_scenarios_have_zero_deltas() {
    let (model, db) = trained();
    let s = scenario("lte-like");
    let res = run_whatif(&[s.clone(), s], model, db, &TraceLibrary::bundled()).unwrap();
    assert_eq!(res.deltas.len(), 2);
    assert!(res.deltas.iter().all(|d| d.mean_delta == 0.0));
    assert_eq!(res.scenarios[0].predictions, res.scenarios[1].predictions);
}

#[test]
fn unknown_users_and_traces_are_named() {
    let (model, db) = trained();
    let traces = TraceLibrary::bundled();
    let mut s = scenario("constant-4");
    s.cohort = Cohort::Users(vec!["nobody".into(), "ghost".into()]);
    match run_whatif(&[s], model, db, &traces) {
        Err(Error::UnknownUsers(u)) => assert_eq!(u, vec!["ghost".to_string(), "nobody".to_string()]),
        other => panic!("{other:?}"),
    }
    assert!(matches!(run_whatif(&[scenario("dialup")], model, db, &traces), Err(Error::UnknownTrace(t)) if t == "dialup"));
}
