//! Randomized invariant checks over every module, run by `dqc1 validate`.

use std::time::Duration;

use num_complex::Complex64;

use super::{emit, read_csv_records, run, Experiment, ExperimentConfig};
use crate::circuit::{
    apply_filter, dqc1_output, normalized_trace_estimate, standard_output, FilterSpec,
};
use crate::correlations::{
    bell_quantity, fano_decompose, geometric_discord, l1_coherence, negativity,
    trace_norm_coherence,
};
use crate::purifier::{
    optimize_filter_with, purification_run_with, EtaMode, OptimizerConfig, PurificationOptions,
};
use crate::qla::{
    fidelity, kron, partial_trace, partial_transpose, psd_sqrt, purity, trace_norm, DensityMatrix,
    Subsystem, UnitaryMatrix,
};
use crate::sampling::{haar_pure_state, haar_unitary, hs_mixed_state, ControlSampler, RngStream};

/// Result of one named check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn(u64, usize) -> Result<String, String>;

const CHECKS: &[(&str, &str, Check)] = &[
    (
        "qla",
        "sampled states satisfy density-matrix invariants",
        states_are_valid,
    ),
    (
        "qla",
        "psd_sqrt squares back to its argument",
        sqrt_squares_back,
    ),
    (
        "qla",
        "fidelity is symmetric, bounded and unitarily invariant",
        fidelity_properties,
    ),
    (
        "qla",
        "trace norm of the partial transpose is at least 1",
        partial_transpose_norm,
    ),
    (
        "qla",
        "partial traces of product states recover the factors",
        product_partial_traces,
    ),
    (
        "sampling",
        "Haar unitaries are unitary with E|U00|^2 = 1/2",
        haar_moments,
    ),
    (
        "sampling",
        "Hilbert-Schmidt qubit states have mean purity 4/5",
        hs_mean_purity,
    ),
    (
        "circuit",
        "DQC1 outputs are valid states",
        dqc1_outputs_valid,
    ),
    (
        "circuit",
        "readout estimates tr(U)/2 for every alpha",
        trace_readout,
    ),
    (
        "circuit",
        "filtering yields valid states with p in (0, 1]",
        filters_valid,
    ),
    (
        "correlations",
        "standard outputs have zero negativity and B <= 2",
        standard_is_local,
    ),
    (
        "correlations",
        "B, N and D are local-unitary invariant",
        local_unitary_invariance,
    ),
    (
        "correlations",
        "Fano decomposition reconstructs the state",
        fano_reconstructs,
    ),
    (
        "correlations",
        "Bell-state oracle values",
        bell_state_oracle,
    ),
    (
        "purifier",
        "optimized filter beats random filters",
        optimizer_beats_random,
    ),
    (
        "purifier",
        "purification purity is monotone per run",
        purification_monotone,
    ),
    (
        "harness",
        "worker count does not change records",
        worker_determinism,
    ),
    (
        "harness",
        "CSV emission round-trips bit-identically",
        csv_round_trip,
    ),
];

/// Run every check with `samples` random draws each (some checks use
/// fewer where a single draw is expensive).
pub fn run_validation(seed: u64, samples: usize) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|&(module, name, check)| {
            let (passed, detail) = match check(seed, samples.max(1)) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome {
                module,
                name,
                passed,
                detail,
            }
        })
        .collect()
}

fn lib<T>(r: crate::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(label: &str, worst: f64, tol: f64) -> Result<String, String> {
    if worst <= tol {
        Ok(format!("{label} {worst:.2e} <= {tol:.0e}"))
    } else {
        Err(format!("{label} {worst:.3e} exceeds {tol:.0e}"))
    }
}

fn random_states(rng: &mut RngStream) -> Result<[DensityMatrix; 4], String> {
    Ok([
        lib(hs_mixed_state(2, rng))?,
        lib(hs_mixed_state(4, rng))?,
        lib(haar_pure_state(2, rng))?,
        lib(haar_pure_state(4, rng))?,
    ])
}

fn states_are_valid(seed: u64, n: usize) -> Result<String, String> {
    let (mut worst, mut negative): (f64, f64) = (0.0, 0.0);
    for k in 0..n as u64 {
        let mut rng = RngStream::new(seed, k);
        for rho in random_states(&mut rng)? {
            let m = rho.matrix();
            worst = worst
                .max(m.hermitian_residual())
                .max((m.trace() - 1.0).norm());
            negative = negative.max(-rho.eigen().min());
        }
    }
    within("most negative eigenvalue", negative, 1e-10)?;
    within("worst residual", worst, 1e-12)
}

fn sqrt_squares_back(seed: u64, n: usize) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for k in 0..n as u64 {
        let mut rng = RngStream::new(seed, k);
        for rho in random_states(&mut rng)? {
            let s = lib(psd_sqrt(rho.matrix()))?;
            worst = worst.max(s.matmul(&s).max_abs_diff(rho.matrix()));
        }
    }
    within("max |sqrt^2 - rho|", worst, 1e-10)
}

fn fidelity_properties(seed: u64, n: usize) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for k in 0..n as u64 {
        let mut rng = RngStream::new(seed, k);
        let a = lib(hs_mixed_state(4, &mut rng))?;
        let b = lib(haar_pure_state(4, &mut rng))?;
        let u = lib(haar_unitary(4, &mut rng))?;
        let fab = lib(fidelity(&a, &b))?;
        let fba = lib(fidelity(&b, &a))?;
        let rotated = lib(fidelity(&lib(a.evolve(&u))?, &lib(b.evolve(&u))?))?;
        let selfish = lib(fidelity(&a, &a))?;
        if !(0.0..=1.0 + 1e-9).contains(&fab) {
            return Err(format!("fidelity {fab} out of range"));
        }
        worst = worst
            .max((fab - fba).abs())
            .max((fab - rotated).abs())
            .max((selfish - 1.0).abs());
    }
    within("worst deviation", worst, 1e-9)
}

fn partial_transpose_norm(seed: u64, n: usize) -> Result<String, String> {
    let mut lowest = f64::INFINITY;
    for k in 0..n as u64 {
        let mut rng = RngStream::new(seed, k);
        for rho in [
            lib(hs_mixed_state(4, &mut rng))?,
            lib(haar_pure_state(4, &mut rng))?,
        ] {
            for sub in [Subsystem::Control, Subsystem::Auxiliary] {
                lowest = lowest.min(lib(trace_norm(&lib(partial_transpose(&rho, sub))?))?);
            }
        }
    }
    within("shortfall below 1", (1.0 - lowest).max(0.0), 1e-9)
}

fn product_partial_traces(seed: u64, n: usize) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for k in 0..n as u64 {
        let mut rng = RngStream::new(seed, k);
        let a = lib(hs_mixed_state(2, &mut rng))?;
        let b = lib(hs_mixed_state(2, &mut rng))?;
        let ab = lib(DensityMatrix::product(&a, &b))?;
        let ta = lib(partial_trace(&ab, Subsystem::Control))?;
        let tb = lib(partial_trace(&ab, Subsystem::Auxiliary))?;
        worst = worst
            .max(ta.matrix().max_abs_diff(a.matrix()))
            .max(tb.matrix().max_abs_diff(b.matrix()));
    }
    within("max deviation", worst, 1e-12)
}

fn haar_moments(seed: u64, n: usize) -> Result<String, String> {
    let n = n.max(1000);
    let mut worst: f64 = 0.0;
    let mut sum = 0.0;
    for k in 0..n as u64 {
        let mut rng = RngStream::new(seed, k);
        let u = lib(haar_unitary(2, &mut rng))?;
        worst = worst.max(u.matrix().unitary_residual());
        sum += u.matrix()[(0, 0)].norm_sqr();
    }
    within("unitary residual", worst, 1e-12)?;
    // Var |U00|^2 = 1/12 for qubits.
    let tol = 5.0 * (1.0 / 12.0 / n as f64).sqrt();
    within("|mean - 1/2|", (sum / n as f64 - 0.5).abs(), tol)
}

fn hs_mean_purity(seed: u64, n: usize) -> Result<String, String> {
    let n = n.max(1000);
    let values: Vec<f64> = (0..n as u64)
        .map(|k| lib(hs_mixed_state(2, &mut RngStream::new(seed, k))).map(|r| purity(&r)))
        .collect::<Result<_, _>>()?;
    let (mean, se) = crate::purifier::mean_and_std_error(&values);
    within("|mean - 0.8|", (mean - 0.8).abs(), 5.0 * se)
}

fn dqc1_outputs_valid(seed: u64, n: usize) -> Result<String, String> {
    for k in 0..n as u64 {
        let mut rng = RngStream::new(seed, k);
        let rho0 = lib(hs_mixed_state(2, &mut rng))?;
        let aux = lib(hs_mixed_state(2, &mut rng))?;
        let u = lib(haar_unitary(2, &mut rng))?;
        lib(dqc1_output(&rho0, &u, &aux))?;
        lib(standard_output(&rho0, &u))?;
    }
    Ok(format!("{n} outputs validated"))
}

fn trace_readout(seed: u64, n: usize) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for k in 0..n as u64 {
        let u = lib(haar_unitary(2, &mut RngStream::new(seed, k)))?;
        let want = u.matrix().trace() * 0.5;
        for alpha in [0.1, 0.5, 1.0] {
            worst = worst.max((lib(normalized_trace_estimate(alpha, &u))? - want).norm());
        }
    }
    within("max |z - tr(U)/2|", worst, 1e-10)
}

fn filters_valid(seed: u64, n: usize) -> Result<String, String> {
    for k in 0..n as u64 {
        let mut rng = RngStream::new(seed, k);
        let rho0 = lib(haar_pure_state(2, &mut rng))?;
        let u = lib(haar_unitary(2, &mut rng))?;
        let bf = lib(standard_output(&rho0, &u))?;
        let spec = lib(FilterSpec::new(
            rng.uniform(),
            rng.uniform() * 3.0,
            rng.uniform() * 6.0,
        ))?;
        let out = lib(apply_filter(&bf, &spec))?;
        if !(out.success_probability > 0.0 && out.success_probability <= 1.0 + 1e-12) {
            return Err(format!("success probability {}", out.success_probability));
        }
    }
    Ok(format!("{n} filtered states validated"))
}

fn standard_is_local(seed: u64, n: usize) -> Result<String, String> {
    let (mut neg, mut bell): (f64, f64) = (0.0, 0.0);
    for k in 0..n as u64 {
        let mut rng = RngStream::new(seed, k);
        let rho0 = lib(ControlSampler::MixedHs.draw(&mut rng))?;
        let u = lib(haar_unitary(2, &mut rng))?;
        let bf = lib(standard_output(&rho0, &u))?;
        neg = neg.max(lib(negativity(&bf))?);
        bell = bell.max(lib(bell_quantity(&bf))?);
    }
    within("max negativity", neg, 1e-10)?;
    within("max B above 2", (bell - 2.0).max(0.0), 1e-9)
}

fn local_unitary_invariance(seed: u64, n: usize) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for k in 0..n as u64 {
        let mut rng = RngStream::new(seed, k);
        let rho = lib(hs_mixed_state(4, &mut rng))?;
        let v = lib(haar_unitary(2, &mut rng))?;
        let w = lib(haar_unitary(2, &mut rng))?;
        let vw = lib(UnitaryMatrix::new(lib(kron(v.matrix(), w.matrix()))?))?;
        let moved = lib(rho.evolve(&vw))?;
        for f in [bell_quantity, negativity, geometric_discord] {
            worst = worst.max((lib(f(&rho))? - lib(f(&moved))?).abs());
        }
    }
    within("max change", worst, 1e-9)
}

fn fano_reconstructs(seed: u64, n: usize) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for k in 0..n as u64 {
        let rho = lib(hs_mixed_state(4, &mut RngStream::new(seed, k)))?;
        worst = worst.max(
            lib(fano_decompose(&rho))?
                .reconstruct()
                .max_abs_diff(rho.matrix()),
        );
    }
    within("max deviation", worst, 1e-12)
}

fn bell_state_oracle(_: u64, _: usize) -> Result<String, String> {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let bell = lib(DensityMatrix::pure(&[h, z, z, h]))?;
    let got = [
        lib(bell_quantity(&bell))?,
        lib(negativity(&bell))?,
        lib(geometric_discord(&bell))?,
        l1_coherence(&bell),
        trace_norm_coherence(&bell),
    ];
    let want = [2.0 * std::f64::consts::SQRT_2, 0.5, 0.5, 1.0, 1.0];
    let worst = got
        .iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs())
        .fold(0.0, f64::max);
    within("max deviation", worst, 1e-9)
}

fn optimizer_beats_random(seed: u64, n: usize) -> Result<String, String> {
    let n = n.min(20);
    let config = OptimizerConfig::default();
    let mut worst: f64 = 0.0;
    for k in 0..n as u64 {
        let mut rng = RngStream::new(seed, k);
        let rho0 = lib(haar_pure_state(2, &mut rng))?;
        let u = lib(haar_unitary(2, &mut rng))?;
        let bf = lib(standard_output(&rho0, &u))?;
        let best = lib(optimize_filter_with(&bf, EtaMode::Free, &config))?;
        for _ in 0..200 {
            let spec = lib(FilterSpec::new(
                rng.uniform(),
                rng.uniform() * 3.2,
                rng.uniform() * 6.3,
            ))?;
            if let Ok(out) = apply_filter(&bf, &spec) {
                let p = purity(&lib(partial_trace(&out.state, Subsystem::Auxiliary))?);
                worst = worst.max(p - best.aux_purity);
            }
        }
    }
    within("random filter excess", worst.max(0.0), 1e-6)
}

fn purification_monotone(seed: u64, n: usize) -> Result<String, String> {
    let n = n.min(10);
    let opts = PurificationOptions {
        eta_mode: EtaMode::Fixed(0.6),
        ..Default::default()
    };
    let mut drop: f64 = 0.0;
    for k in 0..n as u64 {
        let mut rng = RngStream::new(seed, k);
        let rho0 = lib(haar_pure_state(2, &mut rng))?;
        let u = lib(haar_unitary(2, &mut rng))?;
        let trace = lib(purification_run_with(&rho0, &u, &opts))?;
        for w in trace.steps.windows(2) {
            drop = drop.max(w[0].aux_purity - w[1].aux_purity);
        }
        let last = trace.final_step().map_or(0.0, |s| s.aux_purity);
        if trace.converged != (last >= opts.target_purity - 1e-6) {
            return Err(format!(
                "run {k}: converged flag disagrees with purity {last}"
            ));
        }
    }
    within("largest purity drop", drop.max(0.0), 1e-9)
}

fn small_config(seed: u64, workers: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Experiment::StandardScatter);
    cfg.samples = 64;
    cfg.seed = seed;
    cfg.workers = workers;
    cfg
}

fn worker_determinism(seed: u64, _: usize) -> Result<String, String> {
    let one = lib(run(&small_config(seed, 1)))?;
    let three = lib(run(&small_config(seed, 3)))?;
    if one == three {
        Ok(format!("{} records identical", one.records.len()))
    } else {
        Err("record sets differ between 1 and 3 workers".into())
    }
}

fn csv_round_trip(seed: u64, _: usize) -> Result<String, String> {
    let dir = std::env::temp_dir().join(format!("dqc1-validate-{}-{seed}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut cfg = small_config(seed, 1);
    cfg.output_path = dir.join("scatter.csv");
    let outcome = (|| {
        let set = lib(run(&cfg))?;
        let files = lib(emit(&set, &cfg, Duration::ZERO))?;
        let back = lib(read_csv_records(&files.data))?;
        let same = back.len() == set.records.len()
            && back.iter().zip(&set.records).all(|(a, b)| {
                a.sample_index == b.sample_index
                    && a.reals()
                        .iter()
                        .zip(b.reals())
                        .all(|(x, y)| x.map(f64::to_bits) == y.map(f64::to_bits))
            });
        if same {
            Ok(format!("{} records round-tripped", back.len()))
        } else {
            Err("records changed through CSV".to_string())
        }
    })();
    let _ = std::fs::remove_dir_all(&dir);
    outcome
}
