use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ppsruin::pool_stoch::ExpPoolClosedForm;
use ppsruin::scenario::Scenario;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ppsruin"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// Header and rows, parsed as numbers; comment lines are skipped.
fn table(csv: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn comment<'a>(csv: &'a str, key: &str) -> Option<&'a str> {
    csv.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .find_map(|l| l.strip_prefix(key).map(str::trim))
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn bundled_reference_scenario_matches_builtin() {
    let s = Scenario::from_path(&scenarios_dir().join("reference.json")).unwrap();
    assert_eq!(s, Scenario::reference());
}

#[test]
fn pool_reports_threshold_and_provenance() {
    let csv = stdout(&["pool", "--grid", "22590:22596:1"]);
    assert_eq!(comment(&csv, "psi_below_0.05_from_u"), Some("22594"));
    assert!(comment(&csv, "ppsruin").is_some());
    assert_eq!(comment(&csv, "scenario_sha256").unwrap().len(), 64);
    assert_eq!(comment(&csv, "w_rounding"), Some("0"));
    let (header, rows) = table(&csv);
    assert_eq!(header, ["u", "v_hat", "psi_hat", "v_hat_minus_u"]);
    let psi = column(&header, "psi_hat");
    let first_below = rows.iter().find(|r| r[psi] < 0.05).unwrap();
    assert_eq!(first_below[0], 22594.0);
}

#[test]
fn empty_grid_gives_header_only() {
    let csv = stdout(&["pool", "--grid", "10:0:1"]);
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data, ["u,v_hat,psi_hat,v_hat_minus_u"]);
}

#[test]
fn exponential_rewards_match_closed_form() {
    let csv = stdout(&["pool", "--variant", "stoch", "--grid", "0:40000:5000"]);
    let (header, rows) = table(&csv);
    let p = Scenario::reference().pool_params().unwrap();
    let cf = ExpPoolClosedForm::new(p.lambda(), p.mu_d(), p.t(), 1.0 / p.w(), 1.0 / p.b()).unwrap();
    for r in rows {
        let u = r[0];
        assert!((r[column(&header, "v_hat")] - cf.v_hat(u)).abs() < 1e-8 * cf.v_hat(u).max(1.0));
        assert!((r[column(&header, "psi_hat")] - cf.psi_hat(u)).abs() < 1e-12);
    }
}

#[test]
fn output_is_byte_stable_and_seed_moves_only_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<PathBuf> = (0..3).map(|i| dir.path().join(format!("out{i}.csv"))).collect();
    let seeds = ["7", "7", "8"];
    for (path, seed) in paths.iter().zip(seeds) {
        let out = run(&[
            "pool", "--grid", "0:20000:10000", "--mc", "3000", "--seed", seed, "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    let texts: Vec<String> = paths.iter().map(|p| std::fs::read_to_string(p).unwrap()).collect();
    assert_eq!(texts[0], texts[1]);
    let (header, a) = table(&texts[0]);
    let (_, b) = table(&texts[2]);
    for name in ["u", "v_hat", "psi_hat", "v_hat_minus_u"] {
        let i = column(&header, name);
        assert!(a.iter().zip(&b).all(|(x, y)| x[i].to_bits() == y[i].to_bits()));
    }
    let mc = column(&header, "psi_mc");
    assert!(a.iter().zip(&b).any(|(x, y)| x[mc] != y[mc]));
    assert_eq!(comment(&texts[2], "seed"), Some("8"));
}

#[test]
fn fee_and_difficulty_sweeps_are_monotone() {
    for variant in ["det", "stoch"] {
        for axis in ["f:0:0.1:0.01", "q:0.05:0.3:0.05"] {
            let csv = stdout(&["sweep", "--variant", variant, "--x", axis]);
            let (header, rows) = table(&csv);
            let psi = column(&header, "psi_hat");
            assert!(rows.windows(2).all(|w| w[1][psi] <= w[0][psi] + 1e-12), "{variant} {axis}");
        }
    }
}

#[test]
fn two_way_sweep_long_format() {
    let csv = stdout(&["sweep", "--x", "f:0:0.04:0.02", "--y", "p_pool:0.1:0.2:0.1"]);
    let (header, rows) = table(&csv);
    assert_eq!(header, ["f", "p_pool", "u", "w", "v_hat_minus_u", "psi_hat"]);
    assert_eq!(rows.len(), 6);
    let single = stdout(&["sweep", "--x", "u:100:100:1"]);
    assert_eq!(table(&single).1.len(), 1);
}

#[test]
fn grid_cap_is_enforced() {
    let out = run(&["sweep", "--x", "u:0:1000:1", "--max-points", "100"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
    let out = run(&["pool", "--grid", "0:1:0"]);
    assert!(!out.status.success());
}

#[test]
fn miner_break_even_and_dominance() {
    let csv = stdout(&["miner", "--grid", "0:3000:100"]);
    let be: f64 = comment(&csv, "break_even_u").unwrap().parse().unwrap();
    assert!((be - 1255.0).abs() / 1255.0 < 0.05, "{be}");
    let (header, rows) = table(&csv);
    assert_eq!(header, ["u", "v_solo", "v_pooled", "psi_solo", "psi_pooled"]);
    let (solo, pooled) = (column(&header, "psi_solo"), column(&header, "psi_pooled"));
    assert!(rows.iter().all(|r| r[pooled] <= r[solo]));

    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::reference();
    s.pool.f = 0.0;
    let path = dir.path().join("nofee.json");
    std::fs::write(&path, s.to_json()).unwrap();
    for variant in ["det", "stoch"] {
        let csv = stdout(&["miner", "--variant", variant, "--grid", "0:3000:100", "--scenario", path.to_str().unwrap()]);
        let (_, rows) = table(&csv);
        assert!(rows.iter().all(|r| r[4] <= r[3]), "{variant}");
    }
}

#[test]
fn invalid_scenarios_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::reference();
    s.network.q = 1.0;
    s.network.mu = s.network.lambda;
    let path = dir.path().join("q1.json");
    std::fs::write(&path, s.to_json()).unwrap();
    let out = run(&["miner", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("q"));

    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"network\": {}}").unwrap();
    assert!(!run(&["pool", "--scenario", path.to_str().unwrap()]).status.success());
}

#[test]
fn density_on_small_instance() {
    let scenario = scenarios_dir().join("small_density.json");
    let csv = stdout(&["density", "--scenario", scenario.to_str().unwrap(), "--grid", "0.25:2:0.25", "--samples", "4000"]);
    let (header, rows) = table(&csv);
    assert_eq!(header, ["t", "density", "std_error", "terms"]);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[1] >= -3.0 * r[2]));
    let big = run(&["density", "--grid", "336:336:1"]);
    assert_eq!(big.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&big.stderr).to_lowercase().contains("scale"));
}

#[test]
fn verify_passes_and_fails_on_tight_tolerances() {
    let out = run(&["verify", "--only", "1,2,3,5,6"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.contains(" PASS ")).count(), 5);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tight.json");
    std::fs::write(&path, r#"{"threshold_target": 22600, "threshold_window": 0, "break_even_rel": 0.001}"#).unwrap();
    let out = run(&["verify", "--only", "1,2,3", "--tolerances", path.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "{text}");
    assert!(text.contains("criterion 1 FAIL"));
    assert!(text.contains("criterion 2 FAIL"));
    assert!(text.contains("criterion 3 PASS"));
}

#[test]
fn help_lists_every_output_recipe() {
    let help = stdout(&["--help"]);
    for cmd in ["ppsruin pool", "ppsruin sweep", "ppsruin miner", "ppsruin density", "ppsruin verify"] {
        assert!(help.contains(cmd), "{cmd}");
    }
    let pool = stdout(&["pool", "--help"]);
    for flag in ["--scenario", "--variant", "--mc", "--seed", "--out", "--grid"] {
        assert!(pool.contains(flag), "{flag}");
    }
}
