//! End-to-end checks of the `asymloss` binary: subcommand behavior, JSON
//! shapes, determinism of persisted outputs, and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

use asymloss::harness::{synth_dataset, SynthKind};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_asymloss"))
}

fn run_ok(args: &[&str]) -> serde_json::Value {
    let out = bin().args(args).output().expect("spawn asymloss");
    assert!(
        out.status.success(),
        "asymloss {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON stdout")
}

fn run_raw(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn asymloss")
}

fn scratch(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("asymloss-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&p).unwrap();
    p
}

#[test]
fn losses_eval_reports_value_row_and_gradient() {
    let v = run_ok(&["losses", "eval", "--loss", "ce", "--p", "0.5,0.5", "--y", "0"]);
    assert!((v["value"].as_f64().unwrap() - 0.5f64.ln().abs()).abs() < 1e-12);
    assert_eq!(v["grad_p"][0].as_f64().unwrap(), -2.0);
    assert_eq!(v["grad_p"][1].as_f64().unwrap(), 0.0);
    assert_eq!(v["row"].as_array().unwrap().len(), 2);

    let v = run_ok(&[
        "losses", "eval", "--loss", "jal-ce", "--a", "30", "--logits", "1.0,0.0,-1.0", "--y", "1",
    ]);
    assert!(v["grad_logits"].is_array());
    assert_eq!(v["loss"], "JAL-CE(a=1,b=1,A=30)");
}

#[test]
fn verify_flips_at_the_published_boundary() {
    let noise = r#"{"kind":"symmetric","eta":0.8}"#;
    let below = run_ok(&[
        "verify", "--loss", "amse", "--q", "2", "--a", "8.9", "--noise", noise, "--k", "10",
    ]);
    assert_eq!(below["verdict"], "not-asymmetric");
    assert_eq!(below["oracle_vertex"], false);
    let at = run_ok(&[
        "verify", "--loss", "amse", "--q", "2", "--a", "9", "--noise", noise, "--k", "10",
    ]);
    assert_eq!(at["verdict"], "asymmetric");
    assert_eq!(at["oracle_agrees"], true);
    assert!((at["threshold"].as_f64().unwrap() - 2.25).abs() < 1e-9);
    assert!((at["ratio"].as_f64().unwrap() - 2.25).abs() < 1e-9);

    // Oracle-only path for losses outside the AMSE family.
    let mae = run_ok(&[
        "verify", "--loss", "mae", "--weights", "0.5,0.3,0.2",
    ]);
    assert_eq!(mae["verdict"], "asymmetric");
    assert!(mae["threshold"].is_null());
}

#[test]
fn noise_inject_writes_deterministic_outputs() {
    let dir = scratch("inject");
    let ds = synth_dataset(SynthKind::Gaussians, 500, 4, 2, 6.0, 3).unwrap();
    let data_path = dir.join("data.json");
    std::fs::write(&data_path, serde_json::to_string(&ds).unwrap()).unwrap();

    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let v = run_ok(&[
            "noise",
            "inject",
            "--dataset",
            data_path.to_str().unwrap(),
            "--noise",
            r#"{"kind":"symmetric","eta":0.4}"#,
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        let rate = v["flip_rate"].as_f64().unwrap();
        assert!((rate - 0.4).abs() < 0.08, "flip rate {rate}");
    }
    // Same inputs + seed: byte-identical artifacts.
    let a = std::fs::read(out_a.join("noisy.json")).unwrap();
    let b = std::fs::read(out_b.join("noisy.json")).unwrap();
    assert_eq!(a, b);
    let ta = std::fs::read(out_a.join("transition.json")).unwrap();
    let tb = std::fs::read(out_b.join("transition.json")).unwrap();
    assert_eq!(ta, tb);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn train_then_report_round_trip() {
    let dir = scratch("train");
    let outputs = dir.join("outputs");
    let config = serde_json::json!({
        "dataset": {
            "source": "synthetic", "kind": "gaussians",
            "n": 300, "k": 3, "feature_dim": 2, "separation": 6.0, "seed": 1
        },
        "noise": {"kind": "symmetric", "eta": 0.2},
        "loss": {"kind": "ce"},
        "mlp": {"layer_dims": [2, 8, 3]},
        "opt": {
            "lr0": 0.05, "momentum": 0.9, "weight_decay": 5e-5,
            "decay_kind": "l1", "epochs": 5, "batch_size": 32, "seed": 11
        },
        "outputs": outputs,
    });
    let config_path = dir.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let first = run_ok(&["train", "--config", config_path.to_str().unwrap()]);
    let run_dir = PathBuf::from(first["dir"].as_str().unwrap());
    for file in ["config.json", "metrics.csv", "histograms.json", "transition.json", "record.json"] {
        assert!(run_dir.join(file).exists(), "{file} missing");
    }
    let metrics = std::fs::read_to_string(run_dir.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("epoch,lr,train_loss,train_acc_noisy,train_acc_clean,test_acc"));
    assert_eq!(metrics.lines().count(), 6);
    // Verbatim config snapshot when no flags override it.
    assert_eq!(
        std::fs::read(&config_path).unwrap(),
        std::fs::read(run_dir.join("config.json")).unwrap()
    );

    // Re-running reproduces the accuracy exactly; a new seed lands elsewhere.
    let again = run_ok(&["train", "--config", config_path.to_str().unwrap()]);
    assert_eq!(first["final_test_acc"], again["final_test_acc"]);
    assert_eq!(first["run_id"], again["run_id"]);
    let other = run_ok(&["train", "--config", config_path.to_str().unwrap(), "--seed", "12"]);
    assert_ne!(first["run_id"], other["run_id"]);

    let report = run_raw(&["report", "--runs", outputs.to_str().unwrap()]);
    assert!(report.status.success());
    let text = String::from_utf8_lossy(&report.stdout);
    assert!(text.contains("CE"), "table: {text}");
    assert!(text.contains("symmetric(0.20)"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn gradcheck_passes_for_jal() {
    let v = run_ok(&[
        "gradcheck", "--loss", "jal-fl", "--gamma", "0.5", "--trials", "20", "--ks", "2,10",
        "--seed", "5",
    ]);
    assert_eq!(v["pass"], true);
    assert!(v["report"]["max_rel_err_prob"].as_f64().unwrap() < 1e-5);
}

#[test]
fn exit_codes_follow_error_classes() {
    // Unknown loss name: configuration error -> 1.
    let out = run_raw(&["gradcheck", "--loss", "gce"]);
    assert_eq!(out.status.code(), Some(1));
    // Missing dataset file: I/O error -> 3.
    let out = run_raw(&[
        "noise", "inject", "--dataset", "/nonexistent/data.json",
        "--noise", r#"{"kind":"symmetric","eta":0.4}"#, "--out", "/tmp/unused-asymloss",
    ]);
    assert_eq!(out.status.code(), Some(3));
    // Weights without a dominant entry: configuration error -> 1.
    let out = run_raw(&["verify", "--loss", "amse", "--weights", "0.5,0.5"]);
    assert_eq!(out.status.code(), Some(1));
    // Malformed probability vector: runtime error -> 2.
    let out = run_raw(&["losses", "eval", "--loss", "ce", "--p", "0.9,0.9", "--y", "0"]);
    assert_eq!(out.status.code(), Some(2));
    // verify needs weights or noise: configuration error -> 1.
    let out = run_raw(&["verify", "--loss", "amse"]);
    assert_eq!(out.status.code(), Some(1));
}
