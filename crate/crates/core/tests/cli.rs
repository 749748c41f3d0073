use std::fs;
use std::path::Path;

use meanfield::cli::{self, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_OUTSIDE};
use meanfield::{functional, MeanZeroField, Params};
use tempfile::TempDir;

fn run_in(dir: &Path, config: &str, args: &[&str]) -> i32 {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let mut argv = vec!["meanfield".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.extend(["--config".into(), cfg.display().to_string()]);
    argv.extend(["--out".into(), dir.join("out").display().to_string()]);
    cli::run(argv)
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join("out").join(file)).unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(dir, "manifest.json")).unwrap()
}

fn flipped(u: &MeanZeroField, p: &Params) -> MeanZeroField {
    functional::residual(u, p).neg()
}

#[test]
fn check_passes_and_lists_every_suite() {
    let d = TempDir::new().unwrap();
    assert_eq!(run_in(d.path(), "", &["check"]), EXIT_OK);
    let csv = read(d.path(), "check.csv");
    for suite in ["eigenvalue", "poincare", "gradient", "jensen", "convexity", "symmetry", "monotonicity", "mountain"] {
        let line = csv.lines().find(|l| l.starts_with(suite)).unwrap();
        assert!(line.contains(",true,"), "{line}");
    }
    let m = manifest(d.path());
    assert_eq!(m["command"], "check");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["outputs"][0], "check.csv");
}

#[test]
fn broken_gradient_fails_check() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("run.toml");
    fs::write(&cfg, "").unwrap();
    let out = d.path().join("out");
    let code = cli::run_with_residual(
        ["meanfield", "check", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        flipped,
    );
    assert_eq!(code, EXIT_CHECK_FAILED);
    let csv = read(d.path(), "check.csv");
    let failing: Vec<&str> = csv.lines().filter(|l| l.contains(",false,")).collect();
    assert_eq!(failing.len(), 1);
    assert!(failing[0].starts_with("gradient,"));
}

#[test]
fn another_seed_still_passes() {
    let d = TempDir::new().unwrap();
    assert_eq!(run_in(d.path(), "", &["check", "--seed", "7"]), EXIT_OK);
    assert_eq!(manifest(d.path())["config"]["seed"], 7);
}

#[test]
fn expansions_write_rows_and_slopes() {
    let d = TempDir::new().unwrap();
    assert_eq!(run_in(d.path(), "", &["expansions"]), EXIT_OK);
    let csv = read(d.path(), "expansions.csv");
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("eps,ln_inv_eps,dirichlet,ln_exp_plus,ln_exp_minus,I_value"));
    let slopes: serde_json::Value = serde_json::from_str(&read(d.path(), "slopes.json")).unwrap();
    assert!(slopes["slope_dirichlet"].as_f64().unwrap() > 0.0);
    assert!(slopes["slope_I"].as_f64().unwrap() < 0.0);
}

#[test]
fn json_format_switches_tables() {
    let d = TempDir::new().unwrap();
    assert_eq!(run_in(d.path(), "format = \"json\"\n", &["expansions"]), EXIT_OK);
    let rows: serde_json::Value = serde_json::from_str(&read(d.path(), "expansions.json")).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 5);
    assert!(rows[0]["eps"].is_f64());
}

#[test]
fn solve_writes_a_converged_summary() {
    let d = TempDir::new().unwrap();
    assert_eq!(run_in(d.path(), "", &["solve"]), EXIT_OK);
    let s: serde_json::Value = serde_json::from_str(&read(d.path(), "summary.json")).unwrap();
    assert!(s["residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(s["classification"], "compact");
    let u = meanfield::Field::load(d.path().join("out").join("solution.field")).unwrap();
    assert_eq!(u.grid().n(), 128);
    let outputs = manifest(d.path())["outputs"].clone();
    for f in outputs.as_array().unwrap() {
        assert!(d.path().join("out").join(f.as_str().unwrap()).exists());
    }
}

#[test]
fn outputs_are_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for cmd in ["check", "expansions", "solve"] {
        assert_eq!(run_in(a.path(), "", &[cmd]), EXIT_OK);
        assert_eq!(run_in(b.path(), "", &[cmd]), EXIT_OK);
    }
    let mut files: Vec<_> = fs::read_dir(a.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|f| f != "manifest.json")
        .collect();
    files.sort();
    assert!(files.len() >= 6, "{files:?}");
    for f in files {
        assert_eq!(read(a.path(), &f), read(b.path(), &f), "{f}");
    }
}

#[test]
fn solve_outside_the_region_exits_four() {
    let d = TempDir::new().unwrap();
    assert_eq!(run_in(d.path(), "lambda1 = 10.0\nlambda2 = 10.0\n", &["solve"]), EXIT_OUTSIDE);
    assert_eq!(manifest(d.path())["exit_code"], EXIT_OUTSIDE);
}

#[test]
fn unreachable_tolerance_exits_five() {
    let d = TempDir::new().unwrap();
    let code = run_in(d.path(), "max_iters = 2\ntol_residual = 1e-300\n", &["solve"]);
    assert_eq!(code, EXIT_NOT_CONVERGED);
    let s: serde_json::Value = serde_json::from_str(&read(d.path(), "summary.json")).unwrap();
    assert_eq!(s["converged"], false);
}

#[test]
fn bad_configs_exit_two() {
    let d = TempDir::new().unwrap();
    assert_eq!(run_in(d.path(), "lambda1 = ", &["check"]), EXIT_CONFIG);
    assert_eq!(run_in(d.path(), "lamda1 = 3.0", &["check"]), EXIT_CONFIG);
    assert_eq!(run_in(d.path(), "eps_list = [0.1, 0.05, 0.025]", &["expansions"]), EXIT_CONFIG);
    assert_eq!(run_in(d.path(), "", &["frobnicate"]), EXIT_CONFIG);
}

#[test]
fn sweep_rows_follow_the_input() {
    let d = TempDir::new().unwrap();
    let params = d.path().join("params.csv");
    fs::write(&params, "lambda1,lambda2\n30,5\n10,10\n5,30\n30,5\n").unwrap();
    let code = run_in(d.path(), "", &["sweep", "--params", params.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(code, EXIT_OK);
    let csv = read(d.path(), "sweep.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].contains(",skipped,"));
    assert!(rows[0].contains(",converged,true,"));
    assert_eq!(rows[0], rows[3]);
    // the swap symmetry carries over to the minimax level
    let c = |r: &str| r.split(',').nth(6).unwrap().parse::<f64>().unwrap();
    assert!((c(rows[0]) - c(rows[2])).abs() < 1e-8);
}

#[test]
fn empty_sweep_file_exits_two() {
    let d = TempDir::new().unwrap();
    let params = d.path().join("params.csv");
    fs::write(&params, "lambda1,lambda2\n").unwrap();
    assert_eq!(run_in(d.path(), "", &["sweep", "--params", params.to_str().unwrap()]), EXIT_CONFIG);
    fs::write(&params, "a,b\n30,5\n").unwrap();
    assert_eq!(run_in(d.path(), "", &["sweep", "--params", params.to_str().unwrap()]), EXIT_CONFIG);
}
