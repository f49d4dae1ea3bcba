use std::path::Path;

use pairlab::config::ExperimentConfig;
use pairlab::harness;

fn load(text: &str, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml_str(text, Path::new("inline.toml")).unwrap();
    cfg.output_dir = Some(out.to_path_buf());
    cfg
}

#[test]
fn failing_cell_does_not_abort_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(
        "mode = \"scaling\"\nseed = 2\nreplicates = 5\n[scaling]\ngammas = [3.5]\nns = [1000, 100000]\ntarget_nu = 0.5\n",
        dir.path(),
    );
    let s = harness::run(&cfg).unwrap();
    assert!(!s.all_pass);
    let small = s.cell("gamma=3.5,n=1000").unwrap();
    assert!(small.error.is_none());
    assert_eq!(small.stats["replicates"], 5);
    let large = s.cell("gamma=3.5,n=100000").unwrap();
    assert!(large.error.as_deref().unwrap().contains("0.5"));
    let failed: Vec<_> = s.verdicts.iter().filter(|v| !v.pass).map(|v| v.cell.as_str()).collect();
    assert_eq!(failed, ["gamma=3.5,n=100000"]);
    let csv = std::fs::read_to_string(dir.path().join("scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 5);
}

#[test]
fn every_verdict_carries_its_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(
        "mode = \"trajectory\"\nseed = 3\nreplicates = 20\n[degrees]\nkind = \"subpower\"\nn = 20000\ngamma = 4.0\nc = 1.0\ntarget_nu = 0.9\n[tolerances]\ntrajectory_threshold = 0.02\n[trajectory]\nmax_j = 3\nexport_traces = 2\n",
        dir.path(),
    );
    let s = harness::run(&cfg).unwrap();
    assert!(s.all_pass, "{:?}", s.verdicts);
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    for v in json["verdicts"].as_array().unwrap() {
        assert!(v["tolerance"].is_number() && v["margin"].is_number(), "{v}");
    }
    assert_eq!(s.verdict("median_deviation_j3").unwrap().tolerance, 0.02);
    assert!(s.verdict("median_deviation_j4").is_none());

    let trace = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = trace.lines();
    assert!(lines.next().unwrap().starts_with("# pairlab"));
    assert_eq!(lines.next().unwrap(), "t,A,delta_A,partner_degree,component_id");
    let ids: std::collections::BTreeSet<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(ids.into_iter().collect::<Vec<_>>(), ["0", "1"]);
}
