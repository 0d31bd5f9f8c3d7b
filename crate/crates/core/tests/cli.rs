use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(command: &str, cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fujita-lab"))
        .args([command, "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("case.toml");
    fs::write(&p, body).unwrap();
    p
}

fn assert_comment_then_header(path: &Path, header_start: &str) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with('#'), "{}", path.display());
    assert!(lines.next().unwrap().starts_with(header_start), "{}", path.display());
    assert!(lines.next().is_some(), "{} has no rows", path.display());
}

#[test]
fn shipped_configs_succeed() {
    let cases = [
        ("exponents", "exponents.toml", "exponents.csv", ""),
        ("transform-check", "transform-check.toml", "transform_residual.csv", "t,"),
        ("semigroup-check", "semigroup-check.toml", "semigroup_slopes.csv", "kind,"),
        ("mild-solve", "mild-solve.toml", "picard.csv", ""),
        ("local-solve", "local-solve.toml", "local_trace.csv", "t,"),
        ("capacity-fit", "capacity-subcritical.toml", "capacity.csv", "R,"),
        ("capacity-fit", "capacity-power.toml", "capacity.csv", "R,"),
    ];
    for (cmd, cfg, artifact, header) in cases {
        let dir = tempfile::tempdir().unwrap();
        let out = run(cmd, &config(cfg), dir.path());
        assert!(out.status.success(), "{cmd} {cfg}: {}", String::from_utf8_lossy(&out.stderr));
        assert_comment_then_header(&dir.path().join(artifact), header);
    }
}

#[test]
fn blowup_scan_reports_caveat() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("blowup-scan", &config("blowup-scan.toml"), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_comment_then_header(&dir.path().join("scan.csv"), "p,");
    let summary = fs::read_to_string(dir.path().join("scan_summary.txt")).unwrap();
    assert!(summary.contains("finite-horizon"));
}

#[test]
fn output_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(run("mild-solve", &config("mild-solve.toml"), d.path()).status.success());
    }
    for name in ["mild_trajectory.csv", "picard.csv", "mild_summary.txt"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn log_cutoff_fit_reports_poor_regression() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("capacity-fit", &config("capacity-log.toml"), dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("R^2"));
}

#[test]
fn unknown_profile_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[params]\nN = 3\nsigma1 = 0.0\nsigma2 = 0.0\nrho = -0.5\np = 3.0\n[data]\nu0 = \"lorentzian(1)\"\nw = \"zero\"\n",
    );
    assert_eq!(run("mild-solve", &cfg, dir.path()).status.code(), Some(2));
}

#[test]
fn missing_config_and_bad_usage_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("exponents", &dir.path().join("absent.toml"), dir.path()).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_fujita-lab")).arg("no-such-command").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn violated_hypothesis_exits_three_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    // p = 1.5 lies below the small-data threshold 2 for these parameters
    let cfg = write_config(
        dir.path(),
        "[params]\nN = 3\nsigma1 = 0.0\nsigma2 = 0.0\nrho = -0.5\np = 1.5\n[data]\nu0 = \"gaussian(0, 1, 1e-3)\"\nw = \"zero\"\n",
    );
    let out_dir = dir.path().join("out");
    assert_eq!(run("mild-solve", &cfg, &out_dir).status.code(), Some(3));
    assert!(!out_dir.join("picard.csv").exists());
}
