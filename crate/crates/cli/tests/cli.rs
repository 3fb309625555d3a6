use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const GOLDEN: &str = "0.6180339887498949";

fn smeasure(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_smeasure"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

#[test]
fn rho_of_golden_rotation() {
    let dir = TempDir::new().unwrap();
    let o = smeasure(dir.path(), &format!("[map]\noffset = {GOLDEN}\n"), &["rho"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("certified = true"));
    let ladder = read(dir.path(), "rho_ladder.csv");
    assert!(ladder.starts_with("# config_sha256="));
    let q: Vec<i64> = ladder.lines().skip(2).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(q.len() > 10);
    assert!(q.windows(3).all(|w| w[2] == w[1] + w[0]), "{q:?}");
}

#[test]
fn rho_of_fixed_point_map() {
    let dir = TempDir::new().unwrap();
    let o = smeasure(dir.path(), "[family]\na = 0.0\nnu = 0.1\n", &["rho"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rho = 0\n"));
}

#[test]
fn rho_of_mode_locked_critical_map() {
    let dir = TempDir::new().unwrap();
    let o = smeasure(dir.path(), "[family]\na = 0.25\nnu = 0.15915494309189535\n", &["rho"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rational = 1/5"));
    assert!(read(dir.path(), "rho_ladder.csv").contains("level,p,q,value"));
}

#[test]
fn rho_budget_fallback_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = "[map]\noffset = 1e-7\n[tolerances]\nrotation = 1e-12\nrotation_budget = 1000\n";
    let o = smeasure(dir.path(), cfg, &["rho"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("certified = false"));
}

#[test]
fn measure_of_rotation_is_uniform_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("bins = 64\nexponents = [-1.0]\n[map]\noffset = {GOLDEN}\n");
    let o = smeasure(dir.path(), &cfg, &["measure"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let first = read(dir.path(), "measure_s-1.csv");
    assert!(first.starts_with("# config_sha256="));
    for line in first.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let w: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((w - 1.0 / 64.0).abs() < 1e-12);
    }
    let amu = fs::read(dir.path().join("out/measure_s-1.amu")).unwrap();
    assert_eq!(&amu[..4], b"AMU1");
    let report = read(dir.path(), "residuals.csv");
    smeasure(dir.path(), &cfg, &["measure"]);
    assert_eq!(read(dir.path(), "measure_s-1.csv"), first);
    assert_eq!(read(dir.path(), "residuals.csv"), report);
}

#[test]
fn measure_with_empty_exponents_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = smeasure(dir.path(), &format!("exponents = []\n[map]\noffset = {GOLDEN}\n"), &["measure"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solver_non_convergence_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = "bins = 256\nexponents = [-1.0]\n[family]\na = 0.6145263876788\nnu = 0.07957747154594767\n\
               [tolerances]\nkr = 1e-16\nmax_iter = 2\n";
    let o = smeasure(dir.path(), cfg, &["measure"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn kr_between_written_measures() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("bins = 64\nexponents = [-1.0, 0.5]\n[map]\noffset = {GOLDEN}\n");
    assert_eq!(smeasure(dir.path(), &cfg, &["measure"]).status.code(), Some(0));
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_smeasure"))
        .arg("kr")
        .arg(out.join("measure_s-1.csv"))
        .arg(out.join("measure_s0.5.amu"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let d: f64 = stdout(&o).lines().last().unwrap().trim_start_matches("kr = ").parse().unwrap();
    assert!(d < 1e-12);
}

#[test]
fn cf_lists_convergents() {
    let dir = TempDir::new().unwrap();
    let o = smeasure(dir.path(), "[alpha]\nquotients = [0, 2]\nperiod = 1\ndepth = 5\n", &["cf"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<String> = read(dir.path(), "cf.csv").lines().skip(2).map(String::from).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[4].starts_with("4,2,12,29,"));
}

#[test]
fn partition_rows_cover_levels() {
    let dir = TempDir::new().unwrap();
    let o = smeasure(dir.path(), &format!("levels = 4\n[map]\noffset = {GOLDEN}\n"), &["partition"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "partition.csv");
    assert_eq!(csv.lines().filter(|l| l.starts_with("level,")).count(), 1);
    // q_n + q_{n+1} intervals at levels 1..=4
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#') && !l.starts_with("level")).count(), 3 + 5 + 8 + 13);
}

#[test]
fn tongue_at_zero_has_zero_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = "bins = 256\nnu_grid = [0.0]\n[family]\n[alpha]\nquotients = [0, 1]\nperiod = 1\n";
    let o = smeasure(dir.path(), cfg, &["tongue"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "tongue.csv");
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 1);
    let cols: Vec<&str> = rows[0].split(',').collect();
    assert!((cols[1].parse::<f64>().unwrap() - 0.6180339887498949).abs() < 1e-12);
    assert!(cols[2].parse::<f64>().unwrap().abs() < 1e-12);
}

#[test]
fn float_alpha_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = smeasure(dir.path(), "alpha = 0.618\nnu_grid = [0.0]\n[family]\n", &["tongue"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_config_and_flags_exit_1() {
    let dir = TempDir::new().unwrap();
    assert_eq!(smeasure(dir.path(), "bins = 1000\n", &["rho"]).status.code(), Some(1));
    assert_eq!(smeasure(dir.path(), "", &["rho", "--bogus"]).status.code(), Some(1));
    assert_eq!(smeasure(dir.path(), "[map]\noffset = 0.1\nsine = [1.0]\n", &["rho"]).status.code(), Some(1));
}

#[test]
fn verify_skips_missing_baselines() {
    let dir = TempDir::new().unwrap();
    let o = smeasure(dir.path(), "baselines = \"/nonexistent/baselines.txt\"\n", &["verify", "--select", "regression"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("[SKIP] regression"));
    assert_eq!(text.lines().filter(|l| l.starts_with('[')).count(), 1);
}

#[test]
fn digest_ignores_formatting() {
    let dir = TempDir::new().unwrap();
    let a = smeasure(dir.path(), &format!("[map]\noffset = {GOLDEN}\n"), &["rho"]);
    let b = smeasure(dir.path(), &format!("# same experiment\n[map]\noffset   =   {GOLDEN}\nsine = []\n"), &["rho"]);
    let header = |o: &Output| stdout(o).lines().next().unwrap().to_string();
    assert_eq!(header(&a), header(&b));
}
