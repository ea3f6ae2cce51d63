//! The `dqc1` binary: exit codes, config layering and emitted files.

use std::path::Path;
use std::process::Command;

use dqc1::harness::{
    self, read_csv_records, read_csv_table, read_json, Experiment, ExperimentConfig, OutputFormat,
};

fn dqc1() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dqc1"));
    cmd.env_remove("DQC1_WORKERS");
    cmd
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let ok = dqc1()
        .args(["standard-scatter", "--samples", "5", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    assert!(out.exists() && dir.path().join("s.meta.json").exists());

    assert_eq!(code(dqc1().args(["purity-vs-eta", "--eta", "0.2,1.4"])), 2);
    assert_eq!(code(dqc1().args(["standard-scatter", "--samples", "0"])), 2);
    assert_eq!(
        code(dqc1().args(["standard-scatter", "--control-sampler", "beta"])),
        2
    );
    assert_eq!(code(dqc1().args(["no-such-experiment"])), 2);
    assert_eq!(
        code(
            dqc1()
                .args(["standard-scatter", "--samples", "2"])
                .env("DQC1_WORKERS", "0")
        ),
        2
    );
    assert_eq!(
        code(dqc1().args([
            "standard-scatter",
            "--samples",
            "2",
            "--out",
            "/nonexistent/x.csv"
        ])),
        3
    );
    let missing = dir.path().join("missing.json");
    assert_eq!(
        code(dqc1().arg("standard-scatter").arg("--config").arg(&missing)),
        3
    );
    assert_eq!(code(dqc1().arg("--help")), 0);
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    std::fs::write(
        &config,
        r#"{"experiment": "fidelity-benchmark", "samples": 7, "eta_values": [0.0, 1.0], "seed": 11}"#,
    )
    .unwrap();
    let out = dir.path().join("f.json");
    let status = dqc1()
        .arg("fidelity-benchmark")
        .arg("--config")
        .arg(&config)
        .args(["--samples", "9", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let data = read_json(&out).unwrap();
    assert_eq!(data.config.samples, 9);
    assert_eq!(data.config.seed, 11);
    assert_eq!(data.config.eta_values, vec![0.0, 1.0]);
    assert_eq!(data.records.len(), 18);

    let wrong = dqc1()
        .arg("purification")
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(wrong.status.code(), Some(2));

    std::fs::write(&config, r#"{"samplez": 3}"#).unwrap();
    assert_eq!(
        code(dqc1().arg("standard-scatter").arg("--config").arg(&config)),
        2
    );
}

#[test]
fn worker_env_var_and_hex_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, seed: &str, name: &str| {
        let out = dir.path().join(name);
        let status = dqc1()
            .env("DQC1_WORKERS", workers)
            .args([
                "standard-scatter",
                "--samples",
                "300",
                "--seed",
                seed,
                "--out",
            ])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("1", "0x1f", "a.csv"), run("3", "31", "b.csv"));
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("b.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["workers"], 3);
    assert_eq!(meta["seed"], 31);
}

#[test]
fn validate_subcommand_passes() {
    let out = dqc1()
        .args(["validate", "--samples", "100"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 18);
    assert!(!text.contains("FAIL"));
}

fn emit_to(cfg: &mut ExperimentConfig, path: &Path) -> harness::RecordSet {
    cfg.output_path = path.to_path_buf();
    let set = harness::run(cfg).unwrap();
    harness::emit(&set, cfg, std::time::Duration::ZERO).unwrap();
    set
}

#[test]
fn csv_and_json_round_trip_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    for experiment in [
        Experiment::StandardScatter,
        Experiment::FidelityBenchmark,
        Experiment::CorrelationsVsPurity,
        Experiment::DensityOfStates,
    ] {
        let mut cfg = ExperimentConfig::new(experiment);
        cfg.samples = 25;
        if experiment != Experiment::StandardScatter {
            cfg.eta_values = vec![0.0, 0.4, 1.0];
        }
        cfg.workers = 2;

        let csv = dir.path().join(format!("{experiment}.csv"));
        let set = emit_to(&mut cfg, &csv);
        assert_eq!(read_csv_records(&csv).unwrap(), set.records);
        for table in &set.summary {
            assert_eq!(&read_csv_table(&csv, &table.name).unwrap(), table);
        }

        cfg.output_format = OutputFormat::Json;
        let json = dir.path().join(format!("{experiment}.json"));
        let set = emit_to(&mut cfg, &json);
        let back = read_json(&json).unwrap();
        assert_eq!(back.records, set.records);
        assert_eq!(back.summary, set.summary);
        assert_eq!(back.config, cfg.data_view());
    }
}

#[test]
fn purification_records_carry_steps() {
    let mut cfg = ExperimentConfig::new(Experiment::Purification);
    cfg.samples = 6;
    cfg.eta_values = vec![0.6];
    let set = harness::run(&cfg).unwrap();
    let runs = set.table("runs").unwrap();
    let steps = runs.column("steps").unwrap();
    assert_eq!(set.records.len() as f64, steps.iter().sum::<f64>());
    for r in &set.records {
        assert_eq!(r.eta, Some(0.6));
        assert!(r.step_index.unwrap() >= 1);
        assert!((0.5..=1.0 + 1e-12).contains(&r.purity_aux.unwrap()));
    }
    let per_step = set.table("per_step").unwrap().column("purity_aux").unwrap();
    assert_eq!(
        per_step.len() as f64,
        steps.iter().cloned().fold(0.0, f64::max)
    );
}

#[test]
fn correlations_vs_purity_bins_cover_each_state_once() {
    let mut cfg = ExperimentConfig::new(Experiment::CorrelationsVsPurity);
    cfg.samples = 40;
    cfg.eta_values = vec![0.0, 0.5, 1.0];
    let set = harness::run(&cfg).unwrap();
    let table = set.table("by_purity").unwrap();
    let counts = table.column("count").unwrap();
    assert_eq!(counts.iter().sum::<f64>(), 120.0);
    // The η = 1 states all sit in the lowest bin with zero negativity.
    assert_eq!(table.column("bin_lo").unwrap()[0], 0.5);
    assert!(table.column("negativity_normalized").unwrap()[0].abs() < 1e-6);
    for col in [
        "bell_normalized",
        "negativity_normalized",
        "discord_normalized",
        "coherence_normalized",
    ] {
        assert!(table
            .column(col)
            .unwrap()
            .iter()
            .all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn fidelity_histogram_counts_every_pair() {
    let mut cfg = ExperimentConfig::new(Experiment::FidelityBenchmark);
    cfg.samples = 100;
    let set = harness::run(&cfg).unwrap();
    let hist = set.table("histogram").unwrap();
    assert_eq!(hist.rows.len(), 3 * harness::FIDELITY_BINS);
    assert_eq!(hist.column("count").unwrap().iter().sum::<f64>(), 300.0);
}
