use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fluxmet_cli::CurveTable;

fn fluxmet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluxmet"))
        .args(args)
        .env_remove("FLUXMET_SEED")
        .output()
        .expect("binary runs")
}

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("models")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn qfi_theta_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("theta.csv");
    let o = fluxmet(&[
        "qfi-theta",
        "--t-max",
        "5",
        "--points",
        "11",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = CurveTable::read(&out).unwrap();
    assert_eq!(table.columns.len(), 6);
    let last = table.rows.last().unwrap();
    assert!((last[0] - 5.0).abs() < 1e-12);
    assert!((last[1] - 1.0).abs() < 1e-12);
    assert!((last[2] - 2.0).abs() < 1e-12);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(CurveTable::from_csv(&text).unwrap().to_csv(), text);
}

#[test]
fn qfi_omega_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("omega.csv");
    let o = fluxmet(&[
        "qfi-omega",
        "--t-max",
        "5",
        "--points",
        "6",
        "--domega",
        "0",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = CurveTable::read(&out).unwrap();
    assert!(table.rows[0].iter().all(|&v| v == 0.0));
    let last = table.rows.last().unwrap();
    assert!((last[1] - 6.25).abs() < 1e-12);
    assert!((last[2] - 14.583_333_333_333_334).abs() < 1e-9);
}

#[test]
fn bad_sweep_arguments_exit_2() {
    let o = fluxmet(&["qfi-theta", "--t-max", "-1", "--out", "/tmp/never.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fluxmet(&["qfi-theta", "--dtheta", "0,x", "--out", "/tmp/never.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn adapt_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "repetitions = 8\nrounds = 4\nseed = 17\n").unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = fluxmet(&["adapt", "theta", "--config", s(&config), "--out", s(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            std::fs::read(dir.path().join(name.replace(".csv", "_qec_corrected.csv"))).unwrap(),
            std::fs::read(
                dir.path()
                    .join(name.replace(".csv", "_unitary_controlled.csv")),
            )
            .unwrap(),
        )
    };
    assert_eq!(run("a.csv"), run("b.csv"));
    let table = CurveTable::read(&dir.path().join("a_qec_corrected.csv")).unwrap();
    assert_eq!(
        table.columns,
        vec!["round", "estimate_mean", "mse", "crb_line"]
    );
    assert_eq!(table.rows.len(), 5);
    assert_eq!(table.metadata("seed"), Some("17"));
    assert!((table.rows[0][2] - std::f64::consts::FRAC_PI_4.powi(2)).abs() < 1e-12);
}

#[test]
fn adapt_fixed_point_has_zero_mse() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(
        &config,
        "repetitions = 1\ntrue_value = 0.3\ninitial_guess = 0.3\n",
    )
    .unwrap();
    let out = dir.path().join("o.csv");
    let o = fluxmet(&[
        "adapt",
        "omega",
        "--config",
        s(&config),
        "--out",
        s(&out),
        "--strategy",
        "qec_corrected",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = CurveTable::read(&dir.path().join("o_qec_corrected.csv")).unwrap();
    assert!(table.column("mse").unwrap().iter().all(|&m| m < 1e-8));
    assert!(!dir.path().join("o_unitary_controlled.csv").exists());
}

#[test]
fn adapt_seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_fluxmet"))
        .args([
            "adapt",
            "theta",
            "--reps",
            "2",
            "--strategy",
            "qec",
            "--out",
            s(&out),
        ])
        .env("FLUXMET_SEED", "99")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = CurveTable::read(&dir.path().join("o_qec_corrected.csv")).unwrap();
    assert_eq!(table.metadata("seed"), Some("99"));
}

#[test]
fn adapt_config_errors_exit_2_with_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "shots = 3\n").unwrap();
    let o = fluxmet(&[
        "adapt",
        "theta",
        "--config",
        s(&config),
        "--out",
        "/tmp/never.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("shots"));
    std::fs::write(&config, "[grid]\nresolution = -1.0\n").unwrap();
    let o = fluxmet(&[
        "adapt",
        "omega",
        "--config",
        s(&config),
        "--out",
        "/tmp/never.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("resolution"));
}

#[test]
fn general_qec_bundled_models() {
    let o = fluxmet(&[
        "general-qec",
        "--model",
        s(&models().join("theta-example.model")),
        "--t",
        "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((report["qfi"].as_f64().unwrap() - 2.0).abs() < 1e-10);

    let o = fluxmet(&[
        "general-qec",
        "--model",
        s(&models().join("wrong-code.model")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha[0]"));
}

#[test]
fn general_qec_noiseless_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.model");
    let report = dir.path().join("r.json");
    assert!(fluxmet(&["make-model", "--gamma", "0", "--out", s(&model)])
        .status
        .success());
    let o = fluxmet(&["general-qec", "--model", s(&model), "--out", s(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!((report["qfi"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn malformed_model_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.model");
    std::fs::write(&model, "{\"dim\": 4}").unwrap();
    assert_eq!(
        fluxmet(&["general-qec", "--model", s(&model)])
            .status
            .code(),
        Some(2)
    );
    let missing = dir.path().join("missing.model");
    let o = fluxmet(&["general-qec", "--model", s(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.model"));
}

#[test]
fn plot_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("two.csv");
    let svg = dir.path().join("two.svg");
    std::fs::write(&csv, "x,y\n0,1\n1,2\n2,0\n").unwrap();
    assert!(fluxmet(&["plot", s(&csv), "--out", s(&svg)])
        .status
        .success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 1);

    let table = dir.path().join("theta.csv");
    assert!(fluxmet(&["qfi-theta", "--points", "5", "--out", s(&table)])
        .status
        .success());
    assert!(fluxmet(&["plot", s(&table), "--out", s(&svg)])
        .status
        .success());
    assert_eq!(
        std::fs::read_to_string(&svg)
            .unwrap()
            .matches("<polyline")
            .count(),
        5
    );

    std::fs::write(&csv, "# note: empty\nx,y\n").unwrap();
    assert_eq!(
        fluxmet(&["plot", s(&csv), "--out", s(&svg)]).status.code(),
        Some(2)
    );
}
