//! End-to-end tests of the `lbt` binary: exit codes, subcommand
//! composition, and output determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lbt(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lbt"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_blobs_config(path: &Path, seed: u64) {
    let cfg = serde_json::json!({
        "dataset": {
            "kind": "blobs",
            "train_per_class": 150,
            "val_per_class": 166,
            "classes": 3,
            "dim": 2,
            "spread": 0.12
        },
        "model": { "hidden": [16], "learning_rate": 0.5, "epochs": 60, "batch_size": 32 },
        "attack": { "kind": "fgsm", "strength": { "mode": "band" } },
        "surrogate": {
            "hidden": [8],
            "seed_points": 50,
            "tau": 0.95,
            "patience": 5,
            "lambda": 0.1,
            "max_rounds": 20,
            "learning_rate": 0.5,
            "epochs": 20,
            "batch_size": 16
        },
        "mutation": { "operator": "gf", "rate": 0.4 },
        "retrain": { "learning_rate": 0.05, "epochs": 10, "batch_size": 32 },
        "seed": seed
    });
    fs::write(path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
}

#[test]
fn full_run_produces_report_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_blobs_config(&dir.path().join("config.json"), 31);
    let out = lbt(
        &["--config", "config.json", "--out", "out", "run"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("method"));
    assert!(stdout.contains("lbt"));
    assert!(stdout.contains("random"));
    assert!(dir.path().join("out/report/report.csv").exists());
    assert!(dir.path().join("out/suite/lbt.csv").exists());

    // `report` re-prints the same table from the artifacts.
    let report = lbt(
        &["--config", "config.json", "--out", "out", "report"],
        dir.path(),
    );
    assert!(report.status.success());
    assert_eq!(out.stdout, report.stdout);

    // The report has one row per method plus the header.
    let csv = fs::read_to_string(dir.path().join("out/report/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9);
    assert!(csv.starts_with("method,k,fdr,apfd_raw,apfd_norm,rauc,retrain_delta,seed"));
}

#[test]
fn staged_subcommands_compose_into_a_full_run() {
    let dir = tempfile::tempdir().unwrap();
    write_blobs_config(&dir.path().join("config.json"), 32);
    let base = ["--config", "config.json", "--out", "out"];

    for sub in [
        "train-mut",
        "gen-adv",
        "build-surrogate",
        "calibrate",
        "prioritize",
        "evaluate",
    ] {
        let mut args = base.to_vec();
        args.push(sub);
        let out = lbt(&args, dir.path());
        assert!(
            out.status.success(),
            "{sub} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    // `calibrate` printed the measured threshold and budget.
    let cal = lbt(
        &["--config", "config.json", "--out", "out", "calibrate"],
        dir.path(),
    );
    let text = String::from_utf8_lossy(&cal.stdout).to_string();
    assert!(text.contains("zeta_h"));
    assert!(text.contains("n_max"));

    // `retrain` reports a delta for a finished method.
    let retrain = lbt(
        &[
            "--config",
            "config.json",
            "--out",
            "out",
            "retrain",
            "--method",
            "lbt",
        ],
        dir.path(),
    );
    assert!(retrain.status.success());
    assert!(String::from_utf8_lossy(&retrain.stdout).contains("retrain accuracy delta"));
}

#[test]
fn random_ranking_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write_blobs_config(&dir.path().join("config.json"), 33);
    let base = ["--config", "config.json", "--out", "out"];
    let mut setup = base.to_vec();
    setup.push("run");
    setup.push("--stage");
    setup.push("gen-adv");
    assert!(lbt(&setup, dir.path()).status.success());

    let rank = |seed: &str| {
        let mut args = base.to_vec();
        args.extend(["--seed", seed, "prioritize", "--method", "random"]);
        let out = lbt(&args, dir.path());
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    assert_eq!(rank("7"), rank("7"));
    assert_ne!(rank("7"), rank("8"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();

    // Missing --config.
    let out = lbt(&["run"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // Unparseable config.
    fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    let out = lbt(&["--config", "bad.json", "run"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // Structurally valid JSON, invalid values.
    fs::write(
        dir.path().join("invalid.json"),
        r#"{"dataset":{"kind":"blobs","train_per_class":0,"val_per_class":1,"classes":2,"dim":2,"spread":0.1},
            "model":{"hidden":[4],"learning_rate":0.1,"epochs":1,"batch_size":4},
            "attack":{"kind":"fgsm","strength":{"mode":"band"}},
            "surrogate":{"hidden":[4],"seed_points":10,"tau":0.9,"patience":2,"lambda":0.1,"max_rounds":3,
                         "learning_rate":0.1,"epochs":2,"batch_size":4},
            "mutation":{"operator":"gf","rate":0.1},
            "retrain":{"learning_rate":0.1,"epochs":1,"batch_size":4},
            "seed":1}"#,
    )
    .unwrap();
    let out = lbt(&["--config", "invalid.json", "run"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_upstream_artifacts_exit_with_code_three_and_name_the_producer() {
    let dir = tempfile::tempdir().unwrap();
    write_blobs_config(&dir.path().join("config.json"), 34);
    let out = lbt(
        &["--config", "config.json", "--out", "out", "gen-adv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train-mut"));
}
