//! End-to-end checks of the compiled binary: CSV contracts, determinism of
//! outputs under a fixed seed, override flags, and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_shrinklab")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("exp.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary spawns")
}

const QUADRATIC_CFG: &str = r#"
[model]
family = "normal"
d = 5
sigma2 = 1.0

[kernel]
family = "identity"

[loss]
family = "balanced_squared"
omegas = [0.5]

[[estimator]]
family = "james_stein"
a_fraction_of_cutoff = 0.5

[run]
n = 8192
seed = 42
"#;

#[test]
fn cutoff_csv_contains_the_reference_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), QUADRATIC_CFG);
    let out = run(&[
        "cutoff",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("cutoff.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "bound,route,value,error,model,kernel,omega,d"
    );
    let row = lines.next().unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "quadratic_known_scale");
    assert_eq!(fields[1], "closed_form");
    assert_eq!(fields[2], "3", "2(d-2)(1-omega)sigma2 at d=5, omega=0.5: {row}");
    assert_eq!(fields[6], "0.5");
    assert_eq!(fields[7], "5");
    let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"subcommand\": \"cutoff\""));
    assert!(manifest.contains("\"seed\": 42"));
}

#[test]
fn risk_scan_output_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), QUADRATIC_CFG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let out_c = dir.path().join("c");
    for (out, threads) in [(&out_a, "4"), (&out_b, "1")] {
        let res = Command::new(bin())
            .env("RAYON_NUM_THREADS", threads)
            .args([
                "risk-scan",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .expect("binary spawns");
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let bytes_a = fs::read(out_a.join("risk_scan.csv")).unwrap();
    let bytes_b = fs::read(out_b.join("risk_scan.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b, "same (config, seed) must give identical CSV");

    let res = run(&[
        "risk-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "43",
        "--out",
        out_c.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let bytes_c = fs::read(out_c.join("risk_scan.csv")).unwrap();
    assert_ne!(bytes_a, bytes_c, "a different seed must change the draws");
}

#[test]
fn n_override_lands_in_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), QUADRATIC_CFG);
    let out = run(&[
        "risk-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "4096",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("risk_scan.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[fields.len() - 2], "4096", "{line}");
    }
    let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"n\": 4096"));
}

#[test]
fn half_cutoff_concave_scan_dominates_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[model]
family = "normal"
d = 5
sigma2 = 1.0

[kernel]
family = "reflected_normal"
alpha = 2.0

[loss]
family = "concave_balanced"
omegas = [0.3]

[[estimator]]
family = "baranchik"
a_fraction_of_cutoff = 0.5
r = "rational"
r_c = 5.0

[run]
n = 1000000
seed = 31
"#,
    );
    let out = run(&[
        "risk-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("risk_scan.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        assert!(line.ends_with(",dominates"), "{line}");
        rows += 1;
    }
    assert_eq!(rows, 6);
}

#[test]
fn violated_dominance_sets_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    // A multiplier far beyond the cut-off loses to the target decisively.
    let cfg = write_config(
        dir.path(),
        r#"
[model]
family = "normal"
d = 5
sigma2 = 1.0

[kernel]
family = "identity"

[loss]
family = "balanced_squared"
omegas = [0.0]

[[estimator]]
family = "james_stein"
a = 20.0

[run]
n = 16384
seed = 9
"#,
    );
    let out = run(&[
        "risk-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("risk_scan.csv")).unwrap();
    assert!(csv.contains("violated"), "{csv}");
}

#[test]
fn config_errors_set_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = run(&[
        "cutoff",
        "--config",
        dir.path().join("absent.toml").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(2));

    let bad = write_config(
        dir.path(),
        r#"
[model]
family = "normal"
d = 5
sigma2 = 1.0

[kernel]
family = "identity"
alpha = 2.0

[loss]
family = "balanced_squared"
omegas = [0.5]

[run]
n = 512
seed = 1
"#,
    );
    let out = run(&[
        "cutoff",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stray kernel parameter must be rejected");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[kernel]"), "error should name the block: {err}");
}

#[test]
fn verify_runs_standalone_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(csv.lines().count() >= 15, "{csv}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn bayes_compare_transfers_signs_between_loss_scales() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[model]
family = "normal"
d = 5
sigma2 = 1.0

[kernel]
family = "identity"

[loss]
family = "balanced_squared"
omegas = [0.3, 0.7]

[[estimator]]
family = "conjugate_bayes"
prior_mean = 0.0
prior_var = 2.0

[[estimator]]
family = "james_stein"
a = 3.0

[run]
n = 8192
seed = 5
"#,
    );
    let out = run(&[
        "bayes-compare",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("bayes_compare.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        // The blend identity makes the balanced difference a positive
        // multiple of the unbalanced one at matched draws.
        assert_eq!(fields[fields.len() - 2], "true", "{line}");
        assert_eq!(fields[fields.len() - 1], "pass", "{line}");
        rows += 1;
    }
    assert_eq!(rows, 12);
}

#[test]
fn uv_scan_runs_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[model]
family = "normal"
d = 5
sigma2 = 1.0

[kernel]
family = "identity"

[loss]
family = "balanced_squared"
omegas = [0.0, 0.5]

[[estimator]]
family = "uv_baranchik"
a_fraction_of_cutoff = 0.5
k = 4

[run]
n = 16384
seed = 11
"#,
    );
    let out = run(&[
        "uv-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("uv_scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13, "{csv}");
    assert!(!csv.contains("violated"), "{csv}");
}
