use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn ccluster(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccluster")).args(args).output().expect("binary runs")
}

fn run_with(config: &Path, command: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ccluster(&args)
}

fn shipped(name: &str) -> PathBuf {
    repo().join("configs").join(name)
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

/// Data rows of a CSV, header comments and the column line dropped.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn report_value(path: &Path, key: &str) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} ")).map(str::to_string))
        .unwrap_or_else(|| panic!("{key} missing from {}", path.display()))
}

#[test]
fn detuning_sweep_suppresses_coupling() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&shipped("detuning_sweep.toml"), "gamma-sweep", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("gamma_vs_delta.csv")).unwrap();
    assert!(text.lines().any(|l| l == "delta_over_g,gamma_nn"));
    let rows = csv_rows(&dir.path().join("gamma_vs_delta.csv"));
    assert_eq!(rows.len(), 61);
    let at = |d: f64| rows.iter().find(|r| r[0].parse::<f64>().unwrap() == d).unwrap()[1].parse::<f64>().unwrap();
    assert!(at(20.0).abs() <= 0.02 * at(0.0).abs());
}

#[test]
fn selectivity_sweep_columns() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&shipped("selectivity_sweep.toml"), "gamma-sweep", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("gamma_vs_tau.csv")).unwrap();
    assert!(text.lines().any(|l| l == "g_tau,G_1_0,G_1_1,G_2_0,G_2_1,G_2_2,G_3_0"));
    let rows = csv_rows(&dir.path().join("gamma_vs_tau.csv"));
    let row = rows.iter().find(|r| r[0] == "3.0").unwrap();
    let v: Vec<f64> = row[1..].iter().map(|x| x.parse().unwrap()).collect();
    // nearest neighbour dominates every longer separation
    assert!(v[1..].iter().all(|g| g.abs() * 50.0 < v[0].abs()));
}

#[test]
fn outputs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = shipped("selectivity_sweep.toml");
    let run = |dir: &TempDir| {
        let out = Command::new(env!("CARGO_BIN_EXE_ccluster"))
            .current_dir(dir.path())
            .args(["gamma-sweep", "--config", cfg.to_str().unwrap(), "--seed", "11", "--out", "data"])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        fs::read(dir.path().join("data/gamma_vs_tau.csv")).unwrap()
    };
    let (x, y) = (run(&a), run(&b));
    assert_eq!(x, y);
    assert!(String::from_utf8(x).unwrap().contains("seed = 11"));
}

#[test]
fn empty_grid_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[lattice]\nm = 3\nn = 3\n[gamma_sweep]\ndelta_values = []\ntau_values = [1.0]\n");
    let out_dir = dir.path().join("out");
    let out = run_with(&cfg, "gamma-sweep", &out_dir, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid is empty"));
    assert!(!out_dir.exists());
}

#[test]
fn unknown_key_names_its_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[lattice]\nm = 3\n\n[gamma_sweep]\ntau = 3.0\ndelta_span = 4\n");
    let out = run_with(&cfg, "gamma-sweep", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 6") && err.contains("delta_span"), "{err}");
}

#[test]
fn unwritable_output_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = run_with(&shipped("cluster_2x2_nn.toml"), "cluster", &blocker.join("sub"), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_cluster_is_exact() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&shipped("cluster_2x2_nn.toml"), "cluster", dir.path(), &["--preset", "cpb"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = dir.path().join("cluster_report.txt");
    let fidelity: f64 = report_value(&report, "fidelity").parse().unwrap();
    assert!((fidelity - 1.0).abs() < 1e-10);
    assert_eq!(report_value(&report, "preset"), "cpb");
    let text = fs::read_to_string(&report).unwrap();
    for line in text.lines().filter(|l| l.starts_with("site ")) {
        let cols: Vec<f64> = line.split_whitespace().skip(3).map(|x| x.parse().unwrap()).collect();
        assert!((cols[0] - 1.0).abs() < 1e-10 && (cols[1] - 0.5).abs() < 1e-10, "{line}");
    }
    let snap = csv_rows(&dir.path().join("cluster_state.csv"));
    assert_eq!(snap.len(), 16);
}

#[test]
fn full_table_cluster_has_deficit() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&shipped("cluster_4x4_full.toml"), "cluster", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let deficit: f64 = report_value(&dir.path().join("cluster_report.txt"), "deficit").parse().unwrap();
    assert!(deficit > 0.0 && deficit < 0.05, "{deficit}");
}

#[test]
fn cluster_limits_and_failures() {
    let dir = TempDir::new().unwrap();
    let cap = write_config(&dir, "[lattice]\nm = 5\nn = 5\n[cluster]\n");
    assert_ne!(run_with(&cap, "cluster", dir.path(), &[]).status.code(), Some(0));
    // far detuned: the coupling never reaches pi/4
    let unreachable = write_config(&dir, "[lattice]\nm = 2\nn = 2\ndelta = 500.0\n[cluster]\n");
    let out = run_with(&unreachable, "cluster", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no crossing"));
    assert!(!dir.path().join("cluster_report.txt").exists());
    let missing = write_config(&dir, "[lattice]\nm = 2\nn = 2\n");
    assert_eq!(run_with(&missing, "cluster", dir.path(), &[]).status.code(), Some(2));
}

fn oracle_rows(dir: &Path) -> Vec<Vec<String>> {
    csv_rows(&dir.join("oracle_report.csv"))
}

#[test]
fn oracle_two_sites_pass() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&shipped("oracle_1x2.toml"), "oracle-verify", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rows = oracle_rows(dir.path());
    assert!(rows.iter().all(|r| r[6] == "PASS"));
    let pair = rows.iter().find(|r| r[0] == "pair").unwrap();
    assert!(pair[4].parse::<f64>().unwrap().abs() < 1e-6);
}

#[test]
fn oracle_corrupted_identity_is_expected_fail() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(shipped("oracle_1x2.toml")).unwrap() + "corrupt_identity = true\n";
    let cfg = write_config(&dir, &text);
    let out = run_with(&cfg, "oracle-verify", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let rows = oracle_rows(dir.path());
    assert!(rows.iter().any(|r| r[0] == "identity-corrupted" && r[6] == "XFAIL"));
    assert!(rows.iter().all(|r| r[6] != "XPASS" && r[6] != "FAIL"));
}

#[test]
fn oracle_truncation_drift_is_small() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&shipped("oracle_2x2_drift.toml"), "oracle-verify", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let drift: Vec<f64> = oracle_rows(dir.path()).iter().filter(|r| r[0] == "drift").map(|r| r[4].parse().unwrap()).collect();
    assert_eq!(drift.len(), 6);
    assert!(drift.iter().all(|d: &f64| d.abs() < 1e-7));
}

#[test]
fn oracle_failures_surface_as_rows() {
    let dir = TempDir::new().unwrap();
    // too few photons for the resonant array: the field never closes
    let cfg = write_config(&dir, "[lattice]\nm = 1\nn = 2\nj = 0.1\n[oracle]\ntau = 3.0\nn_max = 1\n");
    let out = run_with(&cfg, "oracle-verify", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(oracle_rows(dir.path()).iter().any(|r| r[6] == "FAIL"));
    let big = write_config(&dir, "[lattice]\nm = 3\nn = 2\n[oracle]\n");
    assert_eq!(run_with(&big, "oracle-verify", dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn wire_verdict_matches_on_both_clusters() {
    let verdict = |cfg: &str| {
        let dir = TempDir::new().unwrap();
        let out = run_with(&shipped(cfg), "mbqc", dir.path(), &[]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let report = dir.path().join("mbqc_report.txt");
        (report_value(&report, "verdict"), report_value(&report, "deterministic"), report_value(&report, "branches"))
    };
    let reference = verdict("mbqc_wire.toml");
    assert_eq!(reference.0, "identity-up-to-Clifford");
    assert_eq!(reference.1, "true");
    assert_eq!(reference, verdict("mbqc_wire_generated.toml"));
}

#[test]
fn rotation_and_cnot_patterns_pass() {
    for cfg in ["mbqc_rotation.toml", "mbqc_cnot.toml"] {
        let dir = TempDir::new().unwrap();
        let out = run_with(&shipped(cfg), "mbqc", dir.path(), &[]);
        assert_eq!(out.status.code(), Some(0), "{cfg}");
        let dev = report_value(&dir.path().join("mbqc_report.txt"), "target_deviation");
        assert!(dev.ends_with("PASS"), "{cfg}: {dev}");
    }
}

#[test]
fn pattern_flag_and_wrong_target() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[mbqc]\ntarget = \"hadamard\"\n");
    let pattern = repo().join("patterns/wire_identity.pat");
    let out = run_with(&cfg, "mbqc", dir.path(), &["--pattern", pattern.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(report_value(&dir.path().join("mbqc_report.txt"), "status") == "FAIL");
}

#[test]
fn malformed_pattern_names_the_line() {
    let dir = TempDir::new().unwrap();
    let pattern = dir.path().join("bad.pat");
    fs::write(&pattern, "lattice 1 3 open\ninput 0 0\n0 0 Q 0 -\noutput 0 2 -\n").unwrap();
    let out = ccluster(&["mbqc", "--pattern", pattern.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
    let clash = dir.path().join("clash.pat");
    fs::write(&clash, "lattice 1 3 open\ninput 0 0\n0 0 X 0 -\n0 0 X 0 -\noutput 0 2 -\n").unwrap();
    let out = ccluster(&["mbqc", "--pattern", clash.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_changes_only_the_sample() {
    let runs: Vec<String> = ["1", "1", "2"]
        .iter()
        .map(|seed| {
            let dir = TempDir::new().unwrap();
            let cfg = shipped("mbqc_wire.toml");
            let out = Command::new(env!("CARGO_BIN_EXE_ccluster"))
                .current_dir(dir.path())
                .args(["mbqc", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", "r"])
                .output()
                .unwrap();
            assert_eq!(out.status.code(), Some(0));
            fs::read_to_string(dir.path().join("r/mbqc_report.txt")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let body = |s: &str| s.lines().filter(|l| !l.starts_with('#') && !l.starts_with("sample")).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&runs[0]), body(&runs[2]));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(ccluster(&["cluster", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(ccluster(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ccluster(&["--version"]).status.code(), Some(0));
}
