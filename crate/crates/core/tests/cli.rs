//! End-to-end exercises of the command-line surface: CSV in, JSON/CSV out.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_offsetrad"))
}

fn write(path: &Path, content: &str) {
    fs::write(path, content).unwrap();
}

#[test]
fn fit_finite_class_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sample.csv");
    let dict = dir.path().join("dict.csv");
    let out = dir.path().join("fit.json");
    // y matches the first dictionary row exactly.
    write(&data, "x_1,y\n0,1.0\n1,2.0\n2,3.0\n");
    write(&dict, "1.0,2.0,3.0\n0.0,0.0,0.0\n");
    let status = bin()
        .args(["fit", "--class", "finite"])
        .arg("--data")
        .arg(&data)
        .arg("--dict")
        .arg(&dict)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(fit["g_hat"], 0);
    assert_eq!(fit["risk_f"], 0.0);
    assert_eq!(fit["lambda_star"], 1.0);
    assert!(fit["base_index"].is_number());
    assert!(fit["risk_g"].is_number());
}

#[test]
fn fit_linear_class_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sample.csv");
    let out = dir.path().join("fit.json");
    // y = 2 x_1 - x_2 exactly.
    write(&data, "x_1,x_2,y\n1,0,2\n0,1,-1\n1,1,1\n2,1,3\n-1,2,-4\n");
    let status = bin()
        .args(["fit", "--class", "linear"])
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let weights = fit["g_hat"].as_array().unwrap();
    assert!((weights[0].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert!((weights[1].as_f64().unwrap() + 1.0).abs() < 1e-8);
    assert!(fit["risk_f"].as_f64().unwrap() < 1e-16);
}

#[test]
fn cover_and_chain_bound_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("values.csv");
    write(
        &data,
        "0.5,0.5,0.5,0.5\n-0.5,0.5,-0.5,0.5\n0.1,0.0,0.2,-0.1\n",
    );
    let cover_out = dir.path().join("cover.json");
    assert!(bin()
        .args(["cover", "--delta", "0.3"])
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(&cover_out)
        .status()
        .unwrap()
        .success());
    let cover: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&cover_out).unwrap()).unwrap();
    assert!(cover["covered_max_dist"].as_f64().unwrap() <= 0.3);
    assert!(cover["size"].as_u64().unwrap() >= 1);

    let star_out = dir.path().join("star.json");
    assert!(bin()
        .args(["cover", "--delta", "0.25", "--star"])
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(&star_out)
        .status()
        .unwrap()
        .success());
    let star: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&star_out).unwrap()).unwrap();
    assert!(star["cover"]["covered_max_dist"].as_f64().unwrap() <= 0.5 + 1e-12);

    let bound_out = dir.path().join("bound.json");
    assert!(bin()
        .args([
            "chain-bound",
            "--c-offset",
            "0.25",
            "--gamma-grid",
            "0.05,0.1,0.2,0.4,0.8",
            "--alpha-grid",
            "0,0.01",
        ])
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(&bound_out)
        .status()
        .unwrap()
        .success());
    let bound: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&bound_out).unwrap()).unwrap();
    let total = bound["total"].as_f64().unwrap();
    let parts = bound["term_finite"].as_f64().unwrap()
        + bound["term_alpha"].as_f64().unwrap()
        + bound["term_dudley"].as_f64().unwrap();
    assert!((total - parts).abs() <= 1e-12 * total.max(1.0));
}

#[test]
fn offset_estimate_reproducible_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let dict = dir.path().join("dict.csv");
    write(&dict, "0.5,-0.5,0.25,0.75\n-0.25,0.5,0.5,-0.5\n");
    let out1 = dir.path().join("offset1.json");
    let out2 = dir.path().join("offset2.json");
    for out in [&out1, &out2] {
        assert!(bin()
            .args([
                "offset",
                "--class",
                "finite",
                "--c-offset",
                "0.25",
                "--reps",
                "500",
                "--seed",
                "7",
                "--convention",
                "eps",
            ])
            .arg("--dict")
            .arg(&dict)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap()
            .success());
    }
    assert_eq!(
        fs::read_to_string(&out1).unwrap(),
        fs::read_to_string(&out2).unwrap()
    );
    let est: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out1).unwrap()).unwrap();
    assert_eq!(est["reps"], 500);
    assert_eq!(est["seed"], 7);
    assert_eq!(est["c_offset"], 0.25);
    assert!(est["mean"].is_number());
    assert!(est["stderr"].as_f64().unwrap() >= 0.0);
    assert_eq!(est["quantiles"].as_array().unwrap().len(), 4);
}

#[test]
fn run_config_produces_manifest_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    write(
        &config,
        r#"{
  "seed": 11,
  "experiments": [
    {"kind": "geom", "trials": 300, "c": 0.05555555555555555, "tol": 1e-9,
     "max_members": 4, "max_n": 8},
    {"kind": "minimax-lb", "instances": 2, "n": 2, "c": 1, "max_members": 2,
     "lambda_grid": null}
  ]
}"#,
    );
    let out_dir = dir.path().join("results");
    assert!(bin()
        .arg("run")
        .arg("--config")
        .arg(&config)
        .arg("--out-dir")
        .arg(&out_dir)
        .status()
        .unwrap()
        .success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert!(manifest["config_sha256"].as_str().unwrap().len() == 64);
    assert!(manifest["config"]["experiments"].as_array().unwrap().len() == 2);
    let geom_csv = fs::read_to_string(out_dir.join("00-geom.csv")).unwrap();
    assert!(geom_csv.starts_with("trial,n,members,min_ratio,violations"));
    let mm_csv = fs::read_to_string(out_dir.join("01-minimax-lb.csv")).unwrap();
    assert!(mm_csv.starts_with(
        "instance,n,c,members,rad_full,rad_sub,lower_bound,minimax_regret,slack,holds"
    ));
}

#[test]
fn malformed_config_reports_schema() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    write(&config, r#"{"seed": "not a number"}"#);
    let output = bin()
        .arg("run")
        .arg("--config")
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("malformed config"), "stderr: {stderr}");
}
