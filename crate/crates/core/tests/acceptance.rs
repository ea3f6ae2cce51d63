//! One test per acceptance criterion. Each writes a single
//! `criterion N: PASS|FAIL ...` line straight to stdout so the verdicts
//! show up even when libtest captures output.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use dqc1::circuit::normalized_trace_estimate;
use dqc1::correlations::{
    bell_quantity, fano_decompose, geometric_discord, l1_coherence, negativity,
    trace_norm_coherence, Correlations,
};
use dqc1::harness::{
    self, validate, Experiment, ExperimentConfig, OutputFormat, RecordSet, BELL_VIOLATION_TOL,
};
use dqc1::qla::{ComplexMatrix, DensityMatrix, UnitaryMatrix};
use dqc1::sampling::control_state;

fn report(n: u32, checks: &[(bool, String)]) {
    let passed = checks.iter().all(|(ok, _)| *ok);
    let detail: Vec<String> = checks
        .iter()
        .map(|(ok, d)| format!("[{}] {d}", if *ok { "ok" } else { "fail" }))
        .collect();
    let line = format!(
        "criterion {n}: {} {}\n",
        if passed { "PASS" } else { "FAIL" },
        detail.join("; ")
    );
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(passed, "{line}");
}

fn check(ok: bool, detail: String) -> (bool, String) {
    (ok, detail)
}

fn config(experiment: Experiment, samples: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(experiment);
    cfg.samples = samples;
    cfg
}

fn run_timed(cfg: &ExperimentConfig) -> (RecordSet, Duration) {
    let start = Instant::now();
    let set = harness::run(cfg).expect("experiment runs");
    (set, start.elapsed())
}

fn column(set: &RecordSet, table: &str, col: &str) -> Vec<f64> {
    set.table(table)
        .and_then(|t| t.column(col))
        .unwrap_or_else(|| panic!("missing {table}.{col}"))
}

/// 10^5 standard DQC1 outputs, shared by criteria 1 to 3.
fn scatter() -> &'static (RecordSet, Duration) {
    static CELL: OnceLock<(RecordSet, Duration)> = OnceLock::new();
    CELL.get_or_init(|| run_timed(&config(Experiment::StandardScatter, 100_000)))
}

fn max_field(set: &RecordSet, f: fn(&harness::SampleRecord) -> Option<f64>) -> f64 {
    set.records
        .iter()
        .filter_map(f)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn criterion_1_no_entanglement_in_standard_dqc1() {
    let (set, elapsed) = scatter();
    let max_n = max_field(set, |r| r.negativity);
    report(
        1,
        &[
            check(
                set.records.len() == 100_000,
                format!("{} samples", set.records.len()),
            ),
            check(max_n < 1e-10, format!("max negativity {max_n:.3e} < 1e-10")),
            check(
                elapsed.as_secs_f64() < 30.0,
                format!("runtime {:.1}s < 30s", elapsed.as_secs_f64()),
            ),
        ],
    );
}

#[test]
fn criterion_2_no_bell_violation_in_standard_dqc1() {
    let (set, _) = scatter();
    let max_b = max_field(set, |r| r.bell);
    report(
        2,
        &[
            check(max_b <= 2.0 + 1e-9, format!("max B {max_b:.6} <= 2 + 1e-9")),
            check(max_b >= 1.95, format!("max B {max_b:.6} >= 1.95")),
        ],
    );
}

#[test]
fn criterion_3_standard_dqc1_maxima() {
    let (set, _) = scatter();
    let max_d = max_field(set, |r| r.discord);
    let max_c = max_field(set, |r| r.coherence);
    report(
        3,
        &[
            check(
                (0.10..=0.125).contains(&max_d),
                format!("max discord {max_d:.6} in [0.10, 0.125]"),
            ),
            check(
                (0.95..=1.0 + 1e-6).contains(&max_c),
                format!("max coherence {max_c:.6} in [0.95, 1 + 1e-6]"),
            ),
        ],
    );
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn werner(p: f64) -> DensityMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = ComplexMatrix::outer(&[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]).unwrap();
    let mixed = ComplexMatrix::identity(4)
        .unwrap()
        .scale_real((1.0 - p) / 4.0);
    DensityMatrix::new(bell.scale_real(p) + mixed).unwrap()
}

#[test]
fn criterion_4_analytic_oracles() {
    const TOL: f64 = 1e-9;
    let mut checks = Vec::new();
    let mut close = |label: &str, got: f64, want: f64| {
        checks.push(check(
            (got - want).abs() <= TOL,
            format!("{label} {got:.12} vs {want:.12}"),
        ));
    };

    let bell = werner(1.0);
    close("Bell B", bell_quantity(&bell).unwrap(), 2.0 * 2f64.sqrt());
    close("Bell N", negativity(&bell).unwrap(), 0.5);
    close("Bell D", geometric_discord(&bell).unwrap(), 0.5);
    close("Bell l1 coherence", l1_coherence(&bell), 1.0);
    close(
        "Bell trace-norm coherence",
        trace_norm_coherence(&bell),
        1.0,
    );

    let flat = DensityMatrix::maximally_mixed(4).unwrap();
    let m = Correlations::of(&flat).unwrap();
    let worst = [
        m.bell,
        m.negativity,
        m.discord,
        m.coherence,
        l1_coherence(&flat),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    close("maximally mixed, largest measure", worst, 0.0);

    close("Werner p=0.5 N", negativity(&werner(0.5)).unwrap(), 0.125);

    let half = DensityMatrix::maximally_mixed(2).unwrap();
    for alpha in [0.0, 0.3, 0.7, 1.0] {
        let rho = DensityMatrix::product(&control_state(alpha).unwrap(), &half).unwrap();
        let s = fano_decompose(&rho).unwrap().s;
        let dev = (s[0].abs()).max(s[1].abs()).max((s[2] - alpha).abs());
        close(&format!("control_state({alpha}) s deviation"), dev, 0.0);
    }

    let unitaries = [
        (ComplexMatrix::identity(2).unwrap(), c(1.0, 0.0), "I"),
        (
            ComplexMatrix::real_diag(&[1.0, -1.0]).unwrap(),
            c(0.0, 0.0),
            "sigma_z",
        ),
        (
            ComplexMatrix::diag(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap(),
            c(0.5, 0.5),
            "diag(1,i)",
        ),
    ];
    for (m, want, name) in unitaries {
        let u = UnitaryMatrix::new(m).unwrap();
        for alpha in [0.5, 1.0] {
            let z = normalized_trace_estimate(alpha, &u).unwrap();
            close(
                &format!("trace estimate {name} (alpha {alpha}) error"),
                (z - want).norm(),
                0.0,
            );
        }
    }
    report(4, &checks);
}

#[test]
fn criterion_5_purity_vs_eta() {
    let mut cfg = config(Experiment::PurityVsEta, 1000);
    cfg.eta_values = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let (set, elapsed) = run_timed(&cfg);
    let means = column(&set, "purity_vs_eta", "mean");
    let at = |eta: f64| means[cfg.eta_values.iter().position(|&e| e == eta).unwrap()];
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);
    report(
        5,
        &[
            check(
                (at(1.0) - 0.5).abs() <= 1e-6,
                format!("eta=1 mean {:.9} = 0.5 +- 1e-6", at(1.0)),
            ),
            check(
                (at(0.5) - 0.62).abs() <= 0.03,
                format!("eta=0.5 mean {:.4} = 0.62 +- 0.03", at(0.5)),
            ),
            check(monotone, format!("non-increasing means {means:.4?}")),
            check(
                elapsed.as_secs_f64() < 600.0,
                format!("runtime {:.1}s < 600s", elapsed.as_secs_f64()),
            ),
        ],
    );
}

#[test]
fn criterion_6_fidelity_ordering() {
    let mut cfg = config(Experiment::FidelityBenchmark, 10_000);
    cfg.eta_values = vec![0.0, 0.5, 1.0];
    let (set, _) = run_timed(&cfg);
    let means = column(&set, "mean", "mean");
    let gaps = [means[1] - means[0], means[2] - means[1]];
    let in_range = set
        .records
        .iter()
        .filter_map(|r| r.fidelity)
        .all(|f| (0.0..=1.0 + 1e-9).contains(&f));
    report(
        6,
        &[
            check(
                gaps.iter().all(|&g| g >= 0.01),
                format!("means {means:.4?}, gaps {gaps:.4?} >= 0.01"),
            ),
            check(in_range, "all fidelities in [0, 1 + 1e-9]".to_string()),
        ],
    );
}

#[test]
fn criterion_7_purification_convergence() {
    let (set, _) = run_timed(&config(Experiment::Purification, 1000));
    let get = |col: &str| column(&set, "overview", col)[0];
    let mean_steps = get("mean_steps_converged");
    let converged = get("converged_fraction");
    let bell = get("final_bell_above_2_fraction");
    let neg = get("final_negativity_normalized_mean");
    report(
        7,
        &[
            check(
                (mean_steps - 12.0).abs() <= 4.0,
                format!("mean steps {mean_steps:.2} = 12 +- 4"),
            ),
            check(
                converged >= 0.95,
                format!("converged {converged:.3} >= 0.95"),
            ),
            check(
                bell >= 0.90,
                format!("final B > 2 + {BELL_VIOLATION_TOL:e} in {bell:.3} >= 0.90 of runs"),
            ),
            check(
                neg >= 0.8,
                format!("final mean normalized negativity {neg:.3e} >= 0.8"),
            ),
        ],
    );
}

#[test]
fn criterion_8_density_of_states() {
    let mut cfg = config(Experiment::DensityOfStates, 10_000);
    cfg.eta_values = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let (set, _) = run_timed(&cfg);
    let mut checks = Vec::new();
    for name in ["discord_fraction", "coherence_fraction", "bell_fraction"] {
        let f = column(&set, "density", name);
        checks.push(check(
            f.windows(2).all(|w| w[1] <= w[0]),
            format!("{name} non-increasing {f:.4?}"),
        ));
        checks.push(check(
            f[4] < 0.01,
            format!("{name} at eta=1 {:.4} < 0.01", f[4]),
        ));
    }
    report(8, &checks);
}

fn emitted_bytes(cfg: &ExperimentConfig, dir: &std::path::Path, tag: &str) -> Vec<Vec<u8>> {
    let mut cfg = cfg.clone();
    let ext = match cfg.output_format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    cfg.output_path = dir.join(format!("{}-{tag}.{ext}", cfg.experiment));
    let set = harness::run(&cfg).unwrap();
    let files = harness::emit(&set, &cfg, Duration::ZERO).unwrap();
    std::iter::once(&files.data)
        .chain(&files.tables)
        .map(|p| std::fs::read(p).unwrap())
        .collect()
}

#[test]
fn criterion_9_determinism_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cases = Vec::new();
    let mut scatter = config(Experiment::StandardScatter, 2000);
    cases.push(scatter.clone());
    scatter.output_format = OutputFormat::Json;
    cases.push(scatter);
    let mut purity = config(Experiment::PurityVsEta, 40);
    purity.eta_values = vec![0.2, 0.6];
    cases.push(purity);
    let mut fid = config(Experiment::FidelityBenchmark, 500);
    fid.output_format = OutputFormat::Json;
    cases.push(fid);
    let mut pur = config(Experiment::Purification, 12);
    pur.eta_values = vec![0.6];
    cases.push(pur);

    let mut checks = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let mut one = case.clone();
        one.workers = 1;
        let mut many = case.clone();
        many.workers = 4;
        let a = emitted_bytes(&one, dir.path(), &format!("{i}-w1"));
        let b = emitted_bytes(&many, dir.path(), &format!("{i}-w4"));
        checks.push(check(
            a == b,
            format!(
                "{} ({:?}) identical for 1 and 4 workers",
                case.experiment, case.output_format
            ),
        ));
    }
    let outcomes = validate::run_validation(1, 500);
    let failed: Vec<_> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name)
        .collect();
    checks.push(check(
        failed.is_empty(),
        format!("validate: {} checks, failures {failed:?}", outcomes.len()),
    ));
    report(9, &checks);
}
