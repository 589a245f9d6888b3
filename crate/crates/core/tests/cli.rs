use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hypershift"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("run.conf");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_dyadic_defaults_pass() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["check"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = read(tmp.path(), "conditions.csv");
    assert!(csv.starts_with("condition,status,worst_margin,witness_x,witness_y,branch\n"));
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(1) == Some("pass")));
    let manifest = read(tmp.path(), "manifest.txt");
    assert!(manifest.contains("# command = check"));
    assert!(manifest.contains("# version = hypershift"));
    assert!(manifest.contains("seed = 0"));
}

#[test]
fn check_constant_perturbation_fails_distortion() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        tmp.path(),
        &["check"],
        Some("family = perturbed\neps = 0.1\ndecay = constant\n"),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("D2 fail"));
    assert!(stdout(&o).contains("first failing branch 3"));
    let csv = read(tmp.path(), "conditions.csv");
    let d2: Vec<&str> = csv.lines().find(|l| l.starts_with("D2,")).unwrap().split(',').collect();
    assert_eq!(d2[1], "fail");
    assert!(d2[5].parse::<usize>().unwrap() >= 3);
    let d1 = csv.lines().find(|l| l.starts_with("D1,")).unwrap();
    assert!(d1.starts_with("D1,pass"));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(run(tmp.path(), &["check"], Some("truncN 20\n")).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["check"], Some("speed = 3\n")).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["check"], Some("[plot]\n")).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["frobnicate"], None).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["check", "--seed", "x"], None).status.code(), Some(2));
    let missing = Command::new(env!("CARGO_BIN_EXE_hypershift"))
        .args(["check", "--config", "/nonexistent/run.conf"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn pressure_dyadic_is_near_zero() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["pressure"], Some("tol = 1e-3\n"));
    assert_eq!(o.status.code(), Some(0));
    let csv = read(tmp.path(), "pressure.csv");
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    let p: f64 = last[5].parse().unwrap();
    assert!((p - (1.0 - 2f64.powi(-20)).ln()).abs() < 1e-12, "{p}");
}

#[test]
fn pressure_rejects_short_depths() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        run(tmp.path(), &["pressure"], Some("nMax = 1\n")).status.code(),
        Some(2)
    );
}

#[test]
fn divergent_potential_fails_with_infinite_pressure() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["pressure"], Some("shift = index:0.7\n"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("P = +inf"));
    let csv = read(tmp.path(), "pressure.csv");
    assert_eq!(csv.lines().nth(1).unwrap().split(',').nth(5), Some("inf"));
}

#[test]
fn decay_dyadic_defaults_fit_one_third() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["decay"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = read(tmp.path(), "decay.csv");
    assert!(csv.starts_with("lag,correlation,fit_c,fit_eta,method\n"));
    for method in ["orbit", "operator"] {
        let row: Vec<&str> = csv.lines().find(|l| l.ends_with(method)).unwrap().split(',').collect();
        let eta: f64 = row[3].parse().unwrap();
        assert!((0.28..=0.38).contains(&eta), "{method}: {eta}");
    }
}

#[test]
fn decay_constant_observable_reports_zero_correlation() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["decay"], Some("obs1 = constant\norbitLength = 100000\n"));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("zero correlation"));
}

#[test]
fn decay_short_orbit_hits_the_noise_floor() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["decay"], Some("orbitLength = 1000\n"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("noise floor"));
}

#[test]
fn report_small_truncation_passes_with_warnings() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["report"], Some("truncN = 4\norbitLength = 200000\n"));
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("warning: escape rate"), "{err}");
    assert!(read(tmp.path(), "manifest.txt").contains("# warning = "));
    for f in [
        "hypotheses.csv",
        "holder.csv",
        "pressure.csv",
        "entropy.csv",
        "gibbs.csv",
    ] {
        assert!(tmp.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn report_sheared_family_passes() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        tmp.path(),
        &["report"],
        Some("family = perturbed\nshear = 0.1\norbitLength = 200000\n"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        tmp.path(),
        &["decay", "--seed", "11"],
        Some("orbitLength = 100000\nbins = 256\n"),
    );
    assert_eq!(o.status.code(), Some(0));
    let first = read(tmp.path(), "decay.csv");
    let manifest = read(tmp.path(), "manifest.txt");
    assert!(manifest.contains("seed = 11"));
    let again = TempDir::new().unwrap();
    let o = run(again.path(), &["decay"], Some(&manifest));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read(again.path(), "decay.csv"), first);
}

#[test]
fn sections_apply_to_their_command_only() {
    let tmp = TempDir::new().unwrap();
    let text = "grid = 16\n[pressure]\nnMax = 1\n";
    assert_eq!(run(tmp.path(), &["check"], Some(text)).status.code(), Some(0));
    assert_eq!(run(tmp.path(), &["pressure"], Some(text)).status.code(), Some(2));
}

#[test]
fn thread_cap_is_validated() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hypershift"))
        .args(["check", "--out"])
        .arg(tmp.path())
        .env("HYPERSHIFT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_hypershift"))
        .args(["check", "--out"])
        .arg(tmp.path())
        .env("HYPERSHIFT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(tmp.path().join("manifest.txt"))
        .unwrap()
        .contains("# threads = 2"));
}
