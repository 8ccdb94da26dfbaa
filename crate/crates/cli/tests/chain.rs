use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_digitwise")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_chain_from_synthetic_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("synth.json"), r#"{"n_users": 12, "sessions_per_user": 150, "seed": 5}"#).unwrap();
    run(&["synth", "--config", s(&d.join("synth.json")), "--out", s(&d.join("corpus"))]);
    assert!(d.join("corpus/ground_truth.csv").exists());

    let report = run(&["ingest", "--input", s(&d.join("corpus/events.csv")), "--format", "csv", "--out", s(&d.join("sessions"))]);
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(report.is_object());

    run(&["process", "--sessions", s(&d.join("sessions")), "--seed", "5", "--out", s(&d.join("proc"))]);
    for f in ["records.csv", "catalog.json", "splits.json", "clean_report.json", "cleaned_events.csv"] {
        assert!(d.join("proc").join(f).exists(), "{f} missing");
    }

    run(&[
        "train-twins",
        "--splits",
        s(&d.join("proc/splits.json")),
        "--catalog",
        s(&d.join("proc/catalog.json")),
        "--seed",
        "5",
        "--out",
        s(&d.join("sens.csv")),
        "--models",
        s(&d.join("twins")),
    ]);
    run(&[
        "evaluate",
        "--records",
        s(&d.join("proc")),
        "--sensitivities",
        s(&d.join("sens.csv")),
        "--horizons",
        "30s,full",
        "--seed",
        "5",
        "--report",
        s(&d.join("report.json")),
        "--plot-data",
        s(&d.join("plots")),
    ]);
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["schema"], "digitwise.eval-report/1");
    assert_eq!(rep["horizons"].as_array().unwrap().len(), 2);
    assert!(d.join("plots/mae_vs_threshold.csv").exists());

    std::fs::write(
        d.join("scen.json"),
        r#"[{"segment_size": 2, "abr": "buffer", "trace": "constant-16", "cohort": "random:4"},
            {"segment_size": 2, "abr": "buffer", "trace": "constant-4", "cohort": "random:4"}]"#,
    )
    .unwrap();
    let table = run(&[
        "whatif",
        "--model",
        s(&d.join("proc/model.json")),
        "--sensitivities",
        s(&d.join("sens.csv")),
        "--scenario",
        s(&d.join("scen.json")),
        "--out",
        s(&d.join("whatif.json")),
    ]);
    assert_eq!(table.lines().count(), 3);
    let res: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("whatif.json")).unwrap()).unwrap();
    assert_eq!(res["deltas"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_format_is_reported() {
    let out = Command::new(env!("CARGO_BIN_EXE_digitwise")).args(["ingest", "--input", "x", "--format", "xml", "--out", "y"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("xml"));
}
