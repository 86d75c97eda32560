//! End-to-end tests of the `dka` binary: exit codes, JSON/CSV shapes, and
//! byte-level determinism of fixed-seed runs.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dka() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dka"))
}

fn run(args: &[&str]) -> Output {
    dka().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn analyze_relu_reports_sparse() {
    let out = run(&["analyze", "--kernel", "relu"]);
    assert!(out.status.success(), "{out:?}");
    let json: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(json["regime"], "sparse");
    assert_eq!(json["symmetry_set"], "{1}");
    let rho = json["fit"]["rho"].as_f64().unwrap();
    assert!((1.49..=1.51).contains(&rho), "rho = {rho}");
}

#[test]
fn analyze_exponential_regimes() {
    let out = run(&["analyze", "--kernel", "exponential", "--gamma", "2"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(json["regime"], "low-disorder");
    assert_eq!(json["symmetry_set"], "{-1,1}");

    let out = run(&["analyze", "--kernel", "exponential", "--gamma", "0.25"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(json["regime"], "high-disorder");
    let t_star = json["t_star"].as_f64().unwrap();
    assert!((t_star - 0.5).abs() < 1e-10);
}

#[test]
fn analyze_hermite_flag() {
    let out = run(&["analyze", "--hermite", "0.25,0.5,0.25"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(json["regime"], "sparse");
    assert!((json["kprime1"].as_f64().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn malformed_config_exits_2_with_location() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "kernel = [not toml").unwrap();
    let out = run(&["analyze", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("line"), "stderr: {err}");
}

#[test]
fn unknown_kernel_exits_2() {
    let out = run(&["analyze", "--kernel", "cosine"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn profile_rejects_high_disorder_with_3() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "profile",
        "--kernel",
        "exponential",
        "--gamma",
        "0.25",
        "--out",
        dir.path().join("o").to_str().unwrap(),
        "--label",
        "x",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn profile_csv_matches_closed_form_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let out_root = dir.path().join("out");
    let mut csvs = Vec::new();
    for label in ["a", "b"] {
        let out = run(&[
            "profile",
            "--kernel",
            "exponential",
            "--gamma",
            "2",
            "--out",
            out_root.to_str().unwrap(),
            "--label",
            label,
        ]);
        assert!(out.status.success(), "{out:?}");
        csvs.push(read(&out_root.join("profile").join(label).join("profile.csv")));
    }
    assert_eq!(csvs[0], csvs[1], "two identical runs differ");

    let lines: Vec<&str> = csvs[0].lines().collect();
    assert_eq!(lines[0], "t,value,converged_at,profile_kind");
    assert_eq!(lines.len(), 202); // header + 201 grid points
    // spot-check t = 0 row: L(0) = 0.25
    let mid: Vec<&str> = lines[101].split(',').collect();
    let t: f64 = mid[0].parse().unwrap();
    let v: f64 = mid[1].parse().unwrap();
    assert!(t.abs() < 1e-12);
    assert!((v - 0.25).abs() < 1e-9);
    assert_eq!(mid[3], "L");

    let meta = read(&out_root.join("profile").join("a").join("meta.json"));
    let json: serde_json::Value = serde_json::from_str(&meta).unwrap();
    assert_eq!(json["command"], "profile");
    assert!(json["tolerances"]["classify"].as_f64().unwrap() > 0.0);
}

#[test]
fn golden_determinism_for_both_builtin_kernels() {
    // two runs of every CSV-emitting command must agree byte for byte,
    // for the arc-cosine and the exponential builtins
    let dir = TempDir::new().unwrap();
    let out_root = dir.path().join("out");
    for (name, kernel_args) in [
        ("relu", vec!["--kernel", "relu"]),
        ("exp", vec!["--kernel", "exponential", "--gamma", "2"]),
    ] {
        let mut csvs = Vec::new();
        for rep in ["p1", "p2"] {
            let label = format!("{name}-{rep}");
            let mut args = vec!["profile"];
            args.extend(kernel_args.iter().copied());
            args.extend([
                "--out",
                out_root.to_str().unwrap(),
                "--label",
                label.leak(),
            ]);
            let out = run(&args);
            assert!(out.status.success(), "{out:?}");
            csvs.push(read(
                &out_root
                    .join("profile")
                    .join(format!("{name}-{rep}"))
                    .join("profile.csv"),
            ));
        }
        assert_eq!(csvs[0], csvs[1], "{name} profile runs differ");

        let mut samples = Vec::new();
        for rep in ["s1", "s2"] {
            let label = format!("{name}-{rep}");
            let mut args = vec!["sample"];
            args.extend(kernel_args.iter().copied());
            args.extend([
                "--points",
                "uniform:2:11",
                "--depth",
                "3",
                "--n",
                "500",
                "--seed",
                "8",
                "--out",
                out_root.to_str().unwrap(),
                "--label",
                label.leak(),
            ]);
            let out = run(&args);
            assert!(out.status.success(), "{out:?}");
            samples.push(read(
                &out_root
                    .join("sample")
                    .join(format!("{name}-{rep}"))
                    .join("samples.csv"),
            ));
        }
        assert_eq!(samples[0], samples[1], "{name} sample runs differ");
    }
}

#[test]
fn sample_runs_are_byte_identical_for_fixed_seed() {
    let dir = TempDir::new().unwrap();
    let out_root = dir.path().join("out");
    let mut files = Vec::new();
    for label in ["r1", "r2"] {
        let out = run(&[
            "sample",
            "--kernel",
            "exponential",
            "--gamma",
            "2",
            "--points",
            "uniform:3:5",
            "--depth",
            "5",
            "--n",
            "2000",
            "--seed",
            "42",
            "--out",
            out_root.to_str().unwrap(),
            "--label",
            label,
        ]);
        assert!(out.status.success(), "{out:?}");
        files.push(read(&out_root.join("sample").join(label).join("samples.csv")));
    }
    assert_eq!(files[0], files[1]);
    let lines: Vec<&str> = files[0].lines().collect();
    assert_eq!(lines[0], "x0,x1,x2");
    assert_eq!(lines.len(), 2001);

    // a different seed changes the bytes
    let out = run(&[
        "sample",
        "--kernel",
        "exponential",
        "--gamma",
        "2",
        "--points",
        "uniform:3:5",
        "--depth",
        "5",
        "--n",
        "2000",
        "--seed",
        "43",
        "--out",
        out_root.to_str().unwrap(),
        "--label",
        "r3",
    ]);
    assert!(out.status.success());
    let other = read(&out_root.join("sample").join("r3").join("samples.csv"));
    assert_ne!(files[0], other);
}

#[test]
fn rates_emits_csv_and_matrices() {
    let dir = TempDir::new().unwrap();
    let out_root = dir.path().join("out");
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        r#"
            dim = 2
            points = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]

            [kernel]
            kind = "exponential"
            [kernel.parameters]
            gamma = 1.0

            [regularity]
            c = 2.0
            rho = 2.0

            [rates]
            y = [[1.0, 0.0], [0.0, 0.0]]
            contraction = true
        "#,
    )
    .unwrap();
    let out = run(&[
        "rates",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_root.to_str().unwrap(),
        "--label",
        "r",
    ]);
    assert!(out.status.success(), "{out:?}");
    let csv = read(&out_root.join("rates").join("r").join("rates.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    let row: Vec<&str> = lines[1].split(',').collect();
    // i1 for y = (1,0) on the sparse pair with h = 1/2 is 2/3
    let i1: f64 = row[1].parse().unwrap();
    assert!((i1 - 2.0 / 3.0).abs() < 1e-10, "i1 = {i1}");
    // contraction agrees
    let direct: f64 = row[7].parse().unwrap();
    let contracted: f64 = row[8].parse().unwrap();
    assert!((direct - contracted).abs() < 1e-6);

    let b2: serde_json::Value =
        serde_json::from_str(&read(&out_root.join("rates").join("r").join("b2.json"))).unwrap();
    assert_eq!(b2["which"], "B2");
    assert_eq!(b2["rank"], 2);
    let mat = b2["matrix"].as_array().unwrap();
    assert_eq!(mat.len(), 4);
    assert!((mat[0].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn verify_low_disorder_passes() {
    let dir = TempDir::new().unwrap();
    let out_root = dir.path().join("out");
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        r#"
            dim = 2
            points = "uniform:2:9"

            [kernel]
            kind = "exponential"
            [kernel.parameters]
            gamma = 2.0

            [verify]
            n = 50000
        "#,
    )
    .unwrap();
    let out = run(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_root.to_str().unwrap(),
        "--label",
        "v",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout_str(&out);
    assert!(text.contains("verify: PASS"), "{text}");
    let summary: serde_json::Value = serde_json::from_str(&read(
        &out_root.join("verify").join("v").join("summary.json"),
    ))
    .unwrap();
    assert_eq!(summary["pass"], true);
    assert!(out_root.join("verify").join("v").join("convergence.csv").exists());
    assert!(out_root.join("verify").join("v").join("tail_curve.csv").exists());
}

#[test]
fn verify_sparse_with_exact_parameters_passes() {
    let dir = TempDir::new().unwrap();
    let out_root = dir.path().join("out");
    let out = run(&[
        "verify",
        "--kernel",
        "exponential",
        "--gamma",
        "1",
        "--c",
        "2",
        "--rho",
        "2",
        "--points",
        "uniform:2:9",
        "--n",
        "50000",
        "--seed",
        "3",
        "--out",
        out_root.to_str().unwrap(),
        "--label",
        "v",
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout_str(&out);
    assert!(text.contains("sparse diagonal jump: PASS"), "{text}");
    assert!(out_root
        .join("verify")
        .join("v")
        .join("discontinuity.csv")
        .exists());
}

#[test]
fn verify_failure_exits_4() {
    // the fitted exponent alone cannot reach the sparse rescaling tolerance;
    // without the exact-parameter override the check fails deterministically
    let dir = TempDir::new().unwrap();
    let out_root = dir.path().join("out");
    let out = run(&[
        "verify",
        "--kernel",
        "exponential",
        "--gamma",
        "1",
        "--points",
        "uniform:2:9",
        "--l-schedule",
        "1,16,256,1024",
        "--n",
        "20000",
        "--seed",
        "3",
        "--out",
        out_root.to_str().unwrap(),
        "--label",
        "v",
    ]);
    assert_eq!(out.status.code(), Some(4), "{out:?}");
    assert!(stdout_str(&out).contains("verify: FAIL"));
    let summary: serde_json::Value = serde_json::from_str(&read(
        &out_root.join("verify").join("v").join("summary.json"),
    ))
    .unwrap();
    assert_eq!(summary["pass"], false);
}

#[test]
fn thread_cap_flag_and_env() {
    let out = run(&["analyze", "--kernel", "relu", "--threads", "2"]);
    assert!(out.status.success());
    let out = dka()
        .args(["analyze", "--kernel", "relu"])
        .env("DKA_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = run(&["analyze", "--kernel", "relu", "--threads", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_high_disorder_table() {
    let dir = TempDir::new().unwrap();
    let out_root = dir.path().join("out");
    let out = run(&[
        "verify",
        "--kernel",
        "exponential",
        "--gamma",
        "0.25",
        "--points",
        "uniform:2:4",
        "--out",
        out_root.to_str().unwrap(),
        "--label",
        "v",
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout_str(&out).contains("high-disorder covariance limits: PASS"));
}
