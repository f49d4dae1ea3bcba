use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pairlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pairlab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn validate_degree_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.txt", "4\n3 1 2 2\n");
    let o = pairlab(&["validate", &good]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("valid"));

    let odd = write(dir.path(), "odd.txt", "2\n1 2\n");
    let o = pairlab(&["validate", &odd]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("invalid"));

    let short = write(dir.path(), "short.txt", "3\n1 1\n");
    let o = pairlab(&["validate", &short]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    // 10 vertices of degree 2 exceed c n 2^-gamma + 1 for c = 1, gamma = 3.5
    let heavy = write(dir.path(), "heavy.txt", "10\n2 2 2 2 2 2 2 2 2 2\n");
    assert!(pairlab(&["validate", &heavy]).status.success());
    assert_eq!(pairlab(&["validate", &heavy, "--gamma", "3.5", "--c", "1"]).status.code(), Some(1));
}

fn describe(dir: &Path, toml: &str) -> Value {
    let cfg = write(dir, "cfg.toml", toml);
    let o = pairlab(&["describe", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn describe_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let cubic = describe(
        dir.path(),
        "mode = \"poisson_check\"\nseed = 1\nreplicates = 10\n[degrees]\nkind = \"regular\"\nn = 1000\nd = 3\n",
    );
    assert_eq!(cubic[0]["nu"], 2.0);
    assert!((cubic[0]["predicted_p_simple"].as_f64().unwrap() - (-2.0f64).exp()).abs() < 1e-15);

    let sub = describe(
        dir.path(),
        "mode = \"trajectory\"\nseed = 1\nreplicates = 10\n[degrees]\nkind = \"subpower\"\nn = 10000\ngamma = 3.5\nc = 1.0\ntarget_nu = 0.9\n",
    );
    assert!(sub[0]["molloy_reed_sum"].as_f64().unwrap() < 0.0);
    assert_eq!(sub[0]["subpower_valid"], true);
    assert!(sub[0]["degree_cap"].as_u64().unwrap() >= 2);

    write(dir.path(), "edge.txt", "2\n1 1\n");
    let edge = describe(
        dir.path(),
        "mode = \"poisson_check\"\nseed = 1\nreplicates = 10\n[degrees]\nkind = \"file\"\npath = \"edge.txt\"\n",
    );
    assert_eq!(edge[0]["nu"], 0.0);
    assert_eq!(edge[0]["predicted_p_simple"], 1.0);

    let grid = describe(
        dir.path(),
        "mode = \"scaling\"\nseed = 1\nreplicates = 10\n[scaling]\ngammas = [3.5, 4.5]\nns = [1000, 2000]\ntarget_nu = 0.9\n",
    );
    assert_eq!(grid.as_array().unwrap().len(), 4);
}

#[test]
fn run_exit_codes_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let base = "mode = \"oracle_validation\"\nseed = 9\nreplicates = 3000\n[degrees]\nkind = \"explicit\"\ndegrees = [2, 2]\n";
    let cfg = write(dir.path(), "ok.toml", base);
    let out = dir.path().join("ok");
    let o = pairlab(&["run", "--config", &cfg, "--workers", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().any(|l| l.starts_with("PASS pipelines_chi2_p_value")));
    let csv = fs::read_to_string(out.join("oracle_frequencies.csv")).unwrap();
    let summary: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    let first = csv.lines().next().unwrap();
    assert!(first.starts_with("# pairlab "));
    assert!(first.ends_with(&format!("config={} seed=9", summary["config_hash"].as_str().unwrap())));
    assert_eq!(summary["all_pass"], true);

    // seed override changes the hash but stays passing
    let o = pairlab(&["run", "--config", &cfg, "--seed", "10", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let again: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(again["seed"], 10);
    assert_ne!(again["config_hash"], summary["config_hash"]);

    // a poisson check on a too-small sample records a cell error and fails
    let small = write(
        dir.path(),
        "small.toml",
        "mode = \"poisson_check\"\nseed = 1\nreplicates = 10\n[degrees]\nkind = \"regular\"\nn = 20\nd = 3\n",
    );
    let o = pairlab(&["run", "--config", &small, "--out", dir.path().join("small").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let s: Value = serde_json::from_slice(&fs::read(dir.path().join("small/summary.json")).unwrap()).unwrap();
    assert!(s["cells"][0]["error"].as_str().unwrap().contains("1000"));

    let bad = write(dir.path(), "bad.toml", &base.replace("replicates = 3000", "replicates = -1"));
    let o = pairlab(&["run", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("replicates"));
}

#[test]
fn sample_writes_pairings_and_edges() {
    let dir = tempfile::tempdir().unwrap();
    let deg = write(dir.path(), "d.txt", "3\n2 2 2\n");
    let o = pairlab(&["sample", &deg, "--seed", "4"]);
    assert!(o.status.success());
    let pairs = stdout(&o);
    assert_eq!(pairs.lines().count(), 3);
    let mut points: Vec<u32> = pairs.split_whitespace().map(|t| t.parse().unwrap()).collect();
    points.sort_unstable();
    assert_eq!(points, [0, 1, 2, 3, 4, 5]);
    assert_eq!(stdout(&pairlab(&["sample", &deg, "--seed", "4"])), pairs);

    let o = pairlab(&["sample", &deg, "--seed", "4", "--edges"]);
    for line in stdout(&o).lines() {
        let ends: Vec<u32> = line.split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(ends.len(), 2);
        assert!(ends.iter().all(|&v| v < 3));
    }
}
