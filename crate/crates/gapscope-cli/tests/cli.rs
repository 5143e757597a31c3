use std::path::Path;
use std::process::{Command, Output};

fn gapscope(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapscope"))
        .args(args)
        .env("GAPSCOPE_CACHE_DIR", cache)
        .env_remove("GAPSCOPE_LAMBDA")
        .env_remove("GAPSCOPE_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn lyap_on_spectrum_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = gapscope(&["lyap", "--lambda", "2", "--E", "0", "--alpha", "golden", "--iters", "100000"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["lyapunov"].as_f64().unwrap() - 2f64.ln()).abs() < 0.02);
    assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["meta"]["config"]["lambda"], 2.0);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = gapscope(&["dry-check", "--lambda", "1.0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-critical"));
    for args in [
        &["butterfly", "--qmax", "201"][..],
        &["lyap", "--lambda", "-1"],
        &["spectrum", "--grid", "0"],
        &["duality", "--lambda", "0.5"],
        &["lyap", "--alpha", "not-a-number"],
        &["kam-step", "--norm", "0.1", "--qnext", "8"],
        &["frobnicate"],
    ] {
        assert_eq!(gapscope(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn csv_has_header_line_and_lf_endings() {
    let dir = tempfile::tempdir().unwrap();
    let o = gapscope(&["kam-step", "--norm", "1e-4", "--qnext", "8", "--format", "csv"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with(&format!("# gapscope {} {{", env!("CARGO_PKG_VERSION"))));
    assert_eq!(lines[1], "norm,remainder,quadratic_constant,solution_ratio,homological_residual");
    assert_eq!(lines.len(), 5);
}

#[test]
fn out_dir_receives_both_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = gapscope(&["butterfly", "--qmax", "6", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(out.join("butterfly.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("p,q,alpha,lo,hi"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("butterfly.json")).unwrap()).unwrap();
    // One entry per reduced fraction in [0, 1] with q <= 6.
    assert_eq!(json["spectra"].as_array().unwrap().len(), 13);
}

#[test]
fn warm_cache_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["ids", "--lambda", "0.7", "--n", "500"];
    let cold = gapscope(&args, dir.path());
    let warm = gapscope(&args, dir.path());
    assert!(cold.status.success() && warm.status.success());
    assert!(!String::from_utf8_lossy(&cold.stderr).contains("cache hit"));
    assert!(String::from_utf8_lossy(&warm.stderr).contains("cache hit"));
    assert_eq!(cold.stdout, warm.stdout);
    let entries = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(entries, 1);
}

#[test]
fn precedence_flag_env_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "lambda = 0.8\niters = 5000\nseed = 3\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gapscope"))
        .args(["lyap", "--config", cfg.to_str().unwrap(), "--iters", "6000", "--no-cache"])
        .env("GAPSCOPE_LAMBDA", "0.9")
        .env("GAPSCOPE_ITERS", "7000")
        .output()
        .unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let c = &v["meta"]["config"];
    assert_eq!(c["lambda"], 0.9);
    assert_eq!(c["iters"], 6000);
    assert_eq!(c["seed"], 3);
    let banner = String::from_utf8_lossy(&o.stderr);
    assert!(banner.contains("flag 6000 overrides GAPSCOPE_ITERS=7000"), "{banner}");
    assert!(banner.contains("environment 0.9 overrides config file 0.8"), "{banner}");
}

#[test]
fn unknown_config_key_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "lamda = 0.8\n").unwrap();
    let o = gapscope(&["lyap", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gaps_json_lists_labels() {
    let dir = tempfile::tempdir().unwrap();
    let o = gapscope(&["gaps", "--lambda", "0.5", "--alpha", "golden", "--grid", "1e-3"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let mut labels: Vec<i64> = v["gaps"].as_array().unwrap().iter().map(|g| g["label"].as_i64().unwrap()).collect();
    labels.sort_unstable();
    assert_eq!(labels, [-3, -2, -1, 1, 2, 3]);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["lambda", "alpha", "grid_step", "gaps", "intervals", "meta"]);
}
