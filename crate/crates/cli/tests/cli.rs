//! End-to-end exercises of the command line driver and its exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dirac2d"))
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run_ok(out: &Output) -> bool {
    out.status.code() == Some(0)
}

const SMALL_CFG: &str = "n = 64\nlength = 24.0\nepsilon = 0.08\nwidth = 1.2\n\
                         dt = 0.02\nt_end = 1.0\ncadence = 0.5\nsnapshot_every = 0.5\n";

#[test]
fn check_identities_passes_and_corruption_fails() {
    let out = bin()
        .args(["check-identities", "--n", "128"])
        .output()
        .unwrap();
    assert!(run_ok(&out), "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8_lossy(&out.stdout);
    let named_rows = table.lines().filter(|l| l.contains("pass")).count();
    assert!(named_rows >= 12, "expected at least 12 named checks");

    let out = bin()
        .args(["check-identities", "--n", "64", "--corrupt", "gamma1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(
        table.contains("clifford(1,1)"),
        "failure must name the identity"
    );
    assert!(table.contains("FAIL"));
}

#[test]
fn run_writes_artifacts_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "demo.cfg", SMALL_CFG);
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = bin()
            .arg("run")
            .arg(&cfg)
            .arg("--out")
            .arg(out_dir)
            .output()
            .unwrap();
        assert!(run_ok(&out), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let dir_a = out_a.join("demo");
    let dir_b = out_b.join("demo");
    for rel in ["diagnostics.csv", "fnorms.csv", "scatter_report.csv"] {
        let a = std::fs::read(dir_a.join(rel)).unwrap();
        let b = std::fs::read(dir_b.join(rel)).unwrap();
        assert_eq!(a, b, "artifact {rel} differs between identical runs");
    }
    let a = std::fs::read(dir_a.join("snapshots/final.drc2")).unwrap();
    let b = std::fs::read(dir_b.join("snapshots/final.drc2")).unwrap();
    assert_eq!(a, b);
    // Checksums inside the manifests agree even though wall times differ.
    let extract = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p.join("manifest.txt"))
            .unwrap()
            .lines()
            .filter(|l| l.starts_with("artifact = "))
            .map(str::to_string)
            .collect()
    };
    assert_eq!(extract(&dir_a), extract(&dir_b));
    // CSV is non-empty with the fixed header.
    let csv = std::fs::read_to_string(dir_a.join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,charge,ghost_integral"));
    assert!(csv.lines().count() > 2);
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = bin()
        .args(["run", "definitely-missing.cfg"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn config_parse_errors_name_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "bad.cfg", "n = 64\nwat = 7\n");
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr should cite line 2: {err}");
}

#[test]
fn scatter_report_recomputes_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "demo.cfg", SMALL_CFG);
    let out_dir = tmp.path().join("o");
    let out = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(run_ok(&out));
    let run_dir = out_dir.join("demo");
    let original = std::fs::read(run_dir.join("scatter_report.csv")).unwrap();
    std::fs::remove_file(run_dir.join("scatter_report.csv")).unwrap();
    let out = bin().arg("scatter-report").arg(&run_dir).output().unwrap();
    assert!(run_ok(&out), "{}", String::from_utf8_lossy(&out.stderr));
    let recomputed = std::fs::read(run_dir.join("scatter_report.csv")).unwrap();
    assert_eq!(
        original, recomputed,
        "recomputed report must be byte-identical"
    );
}

#[test]
fn convergence_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_cfg(
        tmp.path(),
        "conv.cfg",
        "n = 64\nlength = 24.0\nepsilon = 0.6\nwidth = 1.5\ndt = 0.08\nt_end = 0.8\ncadence = 0.8\n",
    );
    let out = bin().arg("convergence").arg(&good).output().unwrap();
    assert!(run_ok(&out), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("observed order"));

    let linear = write_cfg(
        tmp.path(),
        "lin.cfg",
        "h_matrix = zero\nn = 64\nlength = 24.0\n",
    );
    let out = bin().arg("convergence").arg(&linear).output().unwrap();
    assert!(run_ok(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("skipped"));

    let sharp = write_cfg(
        tmp.path(),
        "sharp.cfg",
        "n = 16\nlength = 40.0\nepsilon = 0.3\nwidth = 0.8\ndt = 0.05\nt_end = 0.5\ncadence = 0.5\n",
    );
    let out = bin().arg("convergence").arg(&sharp).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("under-resolved"));
}

#[test]
fn sweep_single_value_matches_plain_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "sw.cfg", SMALL_CFG);
    let out_dir = tmp.path().join("o");
    let out = bin()
        .args(["sweep"])
        .arg(&cfg)
        .args(["--axis", "epsilon", "--values", "0.08", "--workers", "1"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(run_ok(&out), "{}", String::from_utf8_lossy(&out.stderr));
    let cell_csv = out_dir
        .join("sw_sweep_epsilon")
        .join("epsilon_0.08")
        .join("diagnostics.csv");
    let out2 = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("plain"))
        .output()
        .unwrap();
    assert!(run_ok(&out2));
    let plain_csv = tmp.path().join("plain").join("sw").join("diagnostics.csv");
    assert_eq!(
        std::fs::read(cell_csv).unwrap(),
        std::fs::read(plain_csv).unwrap(),
        "a single-value sweep must reproduce the plain run"
    );
}

#[test]
fn mass_sweep_reports_finite_envelopes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "m.cfg", SMALL_CFG);
    let out_dir = tmp.path().join("o");
    let out = bin()
        .args(["sweep"])
        .arg(&cfg)
        .args(["--axis", "mass", "--values", "0,0.5,1"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(run_ok(&out), "{}", String::from_utf8_lossy(&out.stderr));
    let summary =
        std::fs::read_to_string(out_dir.join("m_sweep_mass").join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    for line in summary.lines().skip(1) {
        assert!(line.ends_with(",ok"), "sweep cell failed: {line}");
    }
}

#[test]
fn env_var_sets_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "demo.cfg", SMALL_CFG);
    let root = tmp.path().join("env-root");
    let out = bin()
        .arg("run")
        .arg(&cfg)
        .env("DIRAC2D_OUT", &root)
        .output()
        .unwrap();
    assert!(run_ok(&out), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(root.join("demo").join("manifest.txt").exists());
}

#[test]
fn usage_errors_exit_one() {
    let out = bin().args(["no-such-command"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["sweep", "x.cfg", "--axis", "bogus", "--values", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
