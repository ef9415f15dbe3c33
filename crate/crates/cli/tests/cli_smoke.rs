//! End-to-end checks of the circrec binary: every subcommand runs, outputs
//! parse, reruns are bit-identical, and --seed actually changes the draw.

use std::path::Path;
use std::process::{Command, Output};

use circrec::generators::{derive_seed, sparse_gaussian_unit, SubgaussianEnsemble};
use circrec::io;
use circrec::measurement::{PartialCirculantOperator, SelectorMask};
use circrec::solver::MeasurementOperator;
use circrec::vector::norm_l2;

fn circrec_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circrec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = circrec_cmd(args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 stdout")
}

#[test]
fn params_reports_regime_split() {
    let stdout = run_ok(&["params", "--n", "65536", "--r", "16"]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["n"], 65536);
    assert_eq!(v["s0"], 12.0);
    assert_eq!(v["regime"], "low-sparsity");
    assert_eq!(v["alpha_r"], 1.0);
    assert_eq!(v["theta"], 1.0);
}

#[test]
fn params_rejects_oversized_r() {
    let out = circrec_cmd(&["params", "--n", "16", "--r", "9"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n/2"));
}

#[test]
fn recover_solves_instance_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let n = 64;
    let xi = SubgaussianEnsemble::Gaussian.sample(n, derive_seed(42, 1));
    let mask = SelectorMask::from_target_m(n, 48, derive_seed(42, 2)).unwrap();
    let x = sparse_gaussian_unit(n, 3, derive_seed(42, 3)).unwrap();
    let b = PartialCirculantOperator::from_parts(&xi, mask.clone()).unwrap();
    let y = MeasurementOperator::apply(&b, &x).unwrap();

    let xi_path = dir.path().join("xi.bin");
    let mask_path = dir.path().join("mask.json");
    let y_path = dir.path().join("y.bin");
    let config_path = dir.path().join("solver.toml");
    io::write_vector_binary(&xi_path, &xi).unwrap();
    io::write_json_pretty(&mask_path, &mask).unwrap();
    io::write_vector_binary(&y_path, &y).unwrap();
    std::fs::write(&config_path, "q = \"l2\"\neta = 0.0\n").unwrap();

    let stdout = run_ok(&[
        "recover",
        "--xi",
        xi_path.to_str().unwrap(),
        "--mask",
        mask_path.to_str().unwrap(),
        "--y",
        y_path.to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["result"]["status"], "converged");
    assert_eq!(v["gap"]["certified"], true);
    let x_sharp: Vec<f64> = v["result"]["x_sharp"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t.as_f64().unwrap())
        .collect();
    let diff: Vec<f64> = x.iter().zip(&x_sharp).map(|(a, b)| a - b).collect();
    assert!(norm_l2(&diff) / norm_l2(&x) < 1e-4);
}

fn write_phase_config(path: &Path) {
    std::fs::write(
        path,
        concat!(
            "n = 32\n",
            "s_grid = [1]\n",
            "m_grid = [16, 32]\n",
            "trials = 4\n",
            "seed = 7\n",
        ),
    )
    .unwrap();
}

#[test]
fn phase_diagram_is_bit_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("phase.toml");
    write_phase_config(&config);
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    let csv_c = dir.path().join("c.csv");
    for (out, seed) in [(&csv_a, None), (&csv_b, None), (&csv_c, Some("8"))] {
        let mut args = vec![
            "phase-diagram",
            "--config",
            config.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
        ];
        if let Some(seed) = seed {
            args.extend(["--seed", seed]);
        }
        run_ok(&args);
    }
    let a = std::fs::read(&csv_a).unwrap();
    let b = std::fs::read(&csv_b).unwrap();
    let c = std::fs::read(&csv_c).unwrap();
    assert_eq!(a, b, "same seed must give identical bytes");
    assert_ne!(a, c, "seed override must change the draws");

    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "n,m,s,trials,successes,median_rel_l2,median_rel_l1,mean_iters,seed"
    );
    assert_eq!(lines.len(), 3);
    // m = n cell at tiny s recovers every trial.
    assert!(lines[2].starts_with("32,32,1,4,4,"));
}

#[test]
fn min_m_reports_probe_trace() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("minm.json");
    std::fs::write(
        &config,
        r#"{ "n": 24, "s": 1, "target_rate": 0.5, "trials": 4, "seed": 3 }"#,
    )
    .unwrap();
    let stdout = run_ok(&["min-m", "--config", config.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let m_star = v["m_star"].as_u64().unwrap();
    assert!(m_star <= 24);
    assert!(!v["probes"].as_array().unwrap().is_empty());
    assert_eq!(v["seed"], 3);
}

#[test]
fn noise_sweep_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        concat!(
            "n = 32\n",
            "m = 28\n",
            "s = 1\n",
            "eta_grid = [0.0, 0.1]\n",
            "trials = 3\n",
            "seed = 5\n",
        ),
    )
    .unwrap();
    let csv = dir.path().join("sweep.csv");
    let json = dir.path().join("sweep.json");
    run_ok(&[
        "noise-sweep",
        "--config",
        config.to_str().unwrap(),
        "--output",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eta,median_l2");
    assert_eq!(lines.len(), 3);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(v["slope"].as_f64().unwrap().is_finite());
}

#[test]
fn certify_identity_is_unbounded() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("eye.csv");
    let eye = nalgebra_identity_csv(8);
    std::fs::write(&matrix, eye).unwrap();
    let stdout = run_ok(&[
        "certify",
        "--matrix",
        matrix.to_str().unwrap(),
        "--r",
        "3",
        "--nu",
        "0.5",
        "--cone-samples",
        "50",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["certificate"]["tau"], 1.0);
    assert_eq!(v["certificate"]["s_unbounded"], true);
    assert!(v["certificate"]["s_max"].is_null());
    assert_eq!(v["certificate"]["inequality_ok"], true);
    assert!(v["cone"]["min_ratio"].as_f64().unwrap() >= 1.0 - 1e-9);
}

fn nalgebra_identity_csv(n: usize) -> String {
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| if i == j { "1".to_string() } else { "0".to_string() })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[test]
fn certify_rejects_r_below_two() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("eye.csv");
    std::fs::write(&matrix, nalgebra_identity_csv(4)).unwrap();
    let out = circrec_cmd(&["certify", "--matrix", matrix.to_str().unwrap(), "--r", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("r >= 2"));
}

#[test]
fn structure_check_reports_quantiles() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("structure.json");
    std::fs::write(
        &config,
        r#"{
            "n": 32,
            "r": 2,
            "kinds": ["inverse-dft", "dft", "dft"],
            "ensemble": "gaussian",
            "samples": 16,
            "seed": 11,
            "alpha": 0.25,
            "theta": 0.25,
            "force_e1": true
        }"#,
    )
    .unwrap();
    let stdout = run_ok(&["structure-check", "--config", config.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["samples"], 16);
    assert_eq!(v["l2_quantiles"].as_array().unwrap().len(), 7);
    assert!(v["forced_e1_l2_ratio"].as_f64().unwrap() > 0.0);
    // 16 sampled rows plus the forced consistency sample.
    assert_eq!(v["rows"].as_array().unwrap().len(), 17);
}
