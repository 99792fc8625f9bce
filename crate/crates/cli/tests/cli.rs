use std::path::Path;
use std::process::{Command, Output};

fn fgl(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgl"))
        .args(args)
        .current_dir(cwd)
        .env("FGL_THREADS", "1")
        .output()
        .expect("binary runs")
}

const CONFIG: &str = r#"
[model]
alpha = 1.5
beta1 = 0.01
beta2 = 0.01
eta1 = 0.01
eta2 = 0.01
mu1 = 1.0
mu2 = 1.0
zeta1 = 0.01
zeta2 = 0.01
gamma1 = 0.0869
gamma2 = 0.0869
a = -1.0
b = 1.0

[grid]
nx = 20

[time]
nt = 20
T = 1.0
"#;

#[test]
fn unknown_subcommand_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fgl(&["nosuch"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nosuch"));
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fgl(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn verify_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = fgl(&["verify", "--seed", "42"], dir.path());
    let b = fgl(&["verify", "--seed", "42"], dir.path());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), b.status.code());
    let text = String::from_utf8_lossy(&a.stdout);
    // exit 3 exactly when some check failed
    let failed = text.lines().any(|l| l.starts_with("FAIL"));
    assert_eq!(a.status.code(), Some(if failed { 3 } else { 0 }));
}

#[test]
fn coeffs_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = fgl(&["coeffs", "--alpha", "2", "--family", "g2", "--length", "3", "--out", "k.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("k.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "m,kappa");
    assert_eq!(lines[2], "1,-2.0000000000000000e0");
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn bad_alpha_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fgl(&["coeffs", "--alpha", "0.5", "--length", "3", "--out", "k.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_and_rerun_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    let out = fgl(&["simulate", "--config", "run.toml", "--snapshots", "0.5,1", "--out", "a"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let a = dir.path().join("a");
    for f in ["energy.csv", "final.csv", "snapshot_00_t0.5.csv", "snapshot_01_t1.csv", "manifest.json"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let snap = std::fs::read_to_string(a.join("snapshot_00_t0.5.csv")).unwrap();
    assert!(snap.starts_with("x,re_u,im_u,abs_u,re_v,im_v,abs_v\n"));
    let out = fgl(&["simulate", "--config", "a/manifest.json", "--out", "b"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    for f in ["energy.csv", "final.csv", "snapshot_01_t1.csv"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn invalid_config_lists_problems() {
    let dir = tempfile::tempdir().unwrap();
    let bad = CONFIG.replace("alpha = 1.5", "alpha = 2.5").replace("T = 1.0", "");
    std::fs::write(dir.path().join("bad.toml"), bad).unwrap();
    let out = fgl(&["simulate", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("time.T") && err.contains("(1, 2]"), "{err}");
}

#[test]
fn non_convergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{CONFIG}\n[solver]\nmax_iter = 1\n");
    std::fs::write(dir.path().join("run.toml"), cfg).unwrap();
    let out = fgl(&["simulate", "--config", "run.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn table1_passes_its_windows() {
    let dir = tempfile::tempdir().unwrap();
    let out = fgl(&["table1", "--out", "t"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("t/table1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 26);
}

#[test]
fn converge_reports_window_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = fgl(&["converge", "--table", "2", "--alphas", "1.5", "--out", "c"], dir.path());
    let csv = std::fs::read_to_string(dir.path().join("c/table2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c/manifest.json")).unwrap()).unwrap();
    let all_ok = manifest["acceptance"].as_array().unwrap().iter().all(|a| a["passed"] == true);
    assert_eq!(out.status.code(), Some(if all_ok { 0 } else { 3 }));
}

#[test]
fn example3_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = fgl(
        &["example3", "--variant", "fig7.2", "--nx", "64", "--t-final", "0.5", "--steps-per-unit", "20", "--out", "e"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("e/member0_spacetime.csv").exists());
    assert!(dir.path().join("e/members.csv").exists());
    let bad = fgl(&["example3", "--variant", "fig9"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
}
