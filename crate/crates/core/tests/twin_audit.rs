use std::collections::HashSet;

use digitwise::event_store::group_sessions;
use digitwise::synth_oracle::{generate, SynthConfig};
use digitwise::twin_registry::SensitivityDb;
use digitwise::workflow::{process, train_twin_db, WorkflowConfig};

#[test]
fn twins_never_see_test_sessions_and_db_round_trips() {
    let cfg = SynthConfig { n_users: 6, sessions_per_user: 150, seed: 31, ..SynthConfig::default() };
    let wf = WorkflowConfig { seed: 31, ..WorkflowConfig::default() };
    let p = process(group_sessions(generate(&cfg).unwrap().events), &wf).unwrap();
    let features = p.catalog.selected();
    let (twins, db) = train_twin_db(&p.splits, &features, &wf).unwrap();
    assert_eq!(twins.len(), p.splits.len());
    for (twin, split) in twins.iter().zip(&p.splits) {
        assert_eq!(twin.user_id, split.user_id);
        let test: HashSet<_> = split.test.iter().map(|r| r.session_id.as_str()).collect();
        let train: HashSet<_> = split.train.iter().map(|r| r.session_id.as_str()).collect();
        assert!(twin.train_sessions.iter().all(|s| train.contains(s.as_str()) && !test.contains(s.as_str())));
        assert_eq!(twin.train_sessions.len(), split.train.len());
    }
    for v in db.vectors.values() {
        assert!((v.weights.values().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sens.csv");
    db.store(&path).unwrap();
    let back = SensitivityDb::load(&path, Some(&features)).unwrap();
    assert_eq!(back.len(), db.len());
    for v in db.vectors.values() {
        let b = back.get(&v.user_id).unwrap();
        for (k, w) in &v.weights {
            assert!((b.weights[k] - w).abs() < 1e-12);
        }
    }
}
