use rayon::prelude::*;

use super::{Cell, ExperimentConfig, RecordSet, SampleRecord, Table};
use crate::circuit::{apply_filter, standard_output, FilterSpec};
use crate::correlations::{Correlations, Measure};
use crate::error::Result;
use crate::purifier::{
    mean_and_std_error, optimize_filter_with, purification_run_with, EtaMode, OptimizerConfig,
    PurificationOptions,
};
use crate::qla::{fidelity, partial_trace, purity, DensityMatrix, Subsystem};
use crate::sampling::{haar_unitary, ControlSampler, RngStream};

pub const FIDELITY_BINS: usize = 50;
pub const PURITY_BINS: usize = 25;

/// Largest values reached by standard DQC1 outputs; a post-selected state
/// counts towards the density of states when it exceeds them.
pub const DOS_DISCORD_THRESHOLD: f64 = 0.1244;
pub const DOS_COHERENCE_THRESHOLD: f64 = 0.9992;
pub const DOS_BELL_THRESHOLD: f64 = 1.9974;

/// Margin above 2 before a Bell quantity counts as a violation; product
/// states sit at exactly 2 up to rounding.
pub const BELL_VIOLATION_TOL: f64 = 1e-9;

fn par_samples<T: Send>(n: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n as u64).into_par_iter().map(f).collect()
}

/// `ρ_bf` for a fresh `(ρ0, U1)` draw.
fn draw_standard(sampler: ControlSampler, rng: &mut RngStream) -> Result<DensityMatrix> {
    let rho0 = sampler.draw(rng)?;
    let u1 = haar_unitary(2, rng)?;
    standard_output(&rho0, &u1)
}

fn aux_purity(rho: &DensityMatrix) -> Result<f64> {
    Ok(purity(&partial_trace(rho, Subsystem::Auxiliary)?))
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, f64::max)
}

/// Per-sample correlations of `ρ_bf` with `aux = I/2`.
pub fn run_standard_scatter(cfg: &ExperimentConfig) -> Result<RecordSet> {
    let records = par_samples(cfg.samples, |k| {
        let mut rng = RngStream::new(cfg.seed, k);
        let bf = draw_standard(cfg.control_sampler, &mut rng)?;
        let rec = SampleRecord {
            sample_index: k,
            purity_aux: Some(aux_purity(&bf)?),
            ..Default::default()
        };
        Ok(rec.with_correlations(&Correlations::of(&bf)?))
    })?;
    let mut maxima = Table::new(
        "maxima",
        &["samples", "bell", "negativity", "discord", "coherence"],
    );
    let col = |f: fn(&SampleRecord) -> Option<f64>| max_of(records.iter().filter_map(f));
    maxima.push(vec![
        records.len().into(),
        col(|r| r.bell).into(),
        col(|r| r.negativity).into(),
        col(|r| r.discord).into(),
        col(|r| r.coherence).into(),
    ]);
    Ok(RecordSet {
        records,
        summary: vec![maxima],
    })
}

struct FilteredDraw {
    bf: DensityMatrix,
    direction: [num_complex::Complex64; 2],
}

fn draw_filtered(sampler: ControlSampler, rng: &mut RngStream) -> Result<FilteredDraw> {
    let bf = draw_standard(sampler, rng)?;
    let ua = haar_unitary(2, rng)?;
    let col = ua.matrix().column(0);
    Ok(FilteredDraw {
        bf,
        direction: [col[0], col[1]],
    })
}

impl FilteredDraw {
    fn at(&self, eta: f64) -> Result<DensityMatrix> {
        let spec = FilterSpec::from_direction(eta, self.direction)?;
        Ok(apply_filter(&self.bf, &spec)?.state)
    }
}

/// Fidelity between two independently drawn post-selected states with
/// random filter directions. Pair `k` reuses its draws for every η.
pub fn run_fidelity_benchmark(cfg: &ExperimentConfig) -> Result<RecordSet> {
    let etas = &cfg.eta_values;
    let per_pair = par_samples(cfg.samples, |k| {
        let mut rng = RngStream::new(cfg.seed, k);
        let a = draw_filtered(cfg.control_sampler, &mut rng)?;
        let b = draw_filtered(cfg.control_sampler, &mut rng)?;
        etas.iter()
            .map(|&eta| fidelity(&a.at(eta)?, &b.at(eta)?))
            .collect::<Result<Vec<f64>>>()
    })?;

    let mut records = Vec::with_capacity(etas.len() * cfg.samples);
    let mut histogram = Table::new("histogram", &["eta", "bin", "bin_lo", "bin_hi", "count"]);
    let mut means = Table::new("mean", &["eta", "mean", "std_error", "samples"]);
    for (i, &eta) in etas.iter().enumerate() {
        let values: Vec<f64> = per_pair.iter().map(|v| v[i]).collect();
        let mut counts = [0usize; FIDELITY_BINS];
        for (k, &f) in values.iter().enumerate() {
            let bin = ((f * FIDELITY_BINS as f64) as usize).min(FIDELITY_BINS - 1);
            counts[bin] += 1;
            records.push(SampleRecord {
                sample_index: k as u64,
                eta: Some(eta),
                fidelity: Some(f),
                ..Default::default()
            });
        }
        let width = 1.0 / FIDELITY_BINS as f64;
        for (bin, &count) in counts.iter().enumerate() {
            histogram.push(vec![
                eta.into(),
                bin.into(),
                (bin as f64 * width).into(),
                ((bin + 1) as f64 * width).into(),
                count.into(),
            ]);
        }
        let (mean, se) = mean_and_std_error(&values);
        means.push(vec![
            eta.into(),
            mean.into(),
            se.into(),
            values.len().into(),
        ]);
    }
    Ok(RecordSet {
        records,
        summary: vec![means, histogram],
    })
}

/// Records for every `(η, sample)` with the purity-optimal filter at that η.
fn optimal_filter_records(cfg: &ExperimentConfig) -> Result<Vec<SampleRecord>> {
    let optimizer = OptimizerConfig::default();
    let mut records = Vec::with_capacity(cfg.eta_values.len() * cfg.samples);
    for &eta in &cfg.eta_values {
        let chunk = par_samples(cfg.samples, |k| {
            let mut rng = RngStream::new(cfg.seed, k);
            let bf = draw_standard(cfg.control_sampler, &mut rng)?;
            let best = optimize_filter_with(&bf, EtaMode::Fixed(eta), &optimizer)?;
            let filtered = apply_filter(&bf, &best.spec)?;
            let rec = SampleRecord {
                sample_index: k,
                eta: Some(eta),
                purity_aux: Some(best.aux_purity),
                success_probability: Some(filtered.success_probability),
                ..Default::default()
            };
            Ok(rec.with_correlations(&Correlations::of(&filtered.state)?))
        })?;
        records.extend(chunk);
    }
    Ok(records)
}

fn by_eta(records: &[SampleRecord], eta: f64) -> impl Iterator<Item = &SampleRecord> {
    records.iter().filter(move |r| r.eta == Some(eta))
}

/// Mean and standard error of the best auxiliary purity at each fixed η.
pub fn run_purity_vs_eta(cfg: &ExperimentConfig) -> Result<RecordSet> {
    let records = optimal_filter_records(cfg)?;
    let mut table = Table::new("purity_vs_eta", &["eta", "mean", "std_error", "samples"]);
    for &eta in &cfg.eta_values {
        let values: Vec<f64> = by_eta(&records, eta).filter_map(|r| r.purity_aux).collect();
        let (mean, se) = mean_and_std_error(&values);
        table.push(vec![
            eta.into(),
            mean.into(),
            se.into(),
            values.len().into(),
        ]);
    }
    Ok(RecordSet {
        records,
        summary: vec![table],
    })
}

fn normalized(r: &SampleRecord) -> Result<[f64; 4]> {
    let c = Correlations {
        bell: r.bell.unwrap_or(0.0),
        negativity: r.negativity.unwrap_or(0.0),
        discord: r.discord.unwrap_or(0.0),
        coherence: r.coherence.unwrap_or(0.0),
    }
    .normalized()?;
    Ok(Measure::ALL.map(|m| c.get(m)))
}

/// Normalized correlations binned by auxiliary purity over `[0.5, 1]`;
/// empty bins are omitted.
pub fn run_correlations_vs_purity(cfg: &ExperimentConfig) -> Result<RecordSet> {
    let records = optimal_filter_records(cfg)?;
    let mut sums = [[0.0f64; 4]; PURITY_BINS];
    let mut counts = [0usize; PURITY_BINS];
    let width = 0.5 / PURITY_BINS as f64;
    for r in &records {
        let p = r.purity_aux.unwrap_or(0.5);
        let bin = (((p - 0.5) / width).max(0.0) as usize).min(PURITY_BINS - 1);
        counts[bin] += 1;
        for (s, v) in sums[bin].iter_mut().zip(normalized(r)?) {
            *s += v;
        }
    }
    let mut table = Table::new(
        "by_purity",
        &[
            "bin_lo",
            "bin_hi",
            "count",
            "bell_normalized",
            "negativity_normalized",
            "discord_normalized",
            "coherence_normalized",
        ],
    );
    for bin in (0..PURITY_BINS).filter(|&b| counts[b] > 0) {
        let n = counts[bin] as f64;
        let mut row: Vec<Cell> = vec![
            (0.5 + bin as f64 * width).into(),
            (0.5 + (bin + 1) as f64 * width).into(),
            counts[bin].into(),
        ];
        row.extend(sums[bin].iter().map(|s| Cell::from(s / n)));
        table.push(row);
    }
    Ok(RecordSet {
        records,
        summary: vec![table],
    })
}

/// Fraction of post-selected states beating the standard-DQC1 maxima.
pub fn run_density_of_states(cfg: &ExperimentConfig) -> Result<RecordSet> {
    let records = optimal_filter_records(cfg)?;
    let mut table = Table::new(
        "density",
        &[
            "eta",
            "samples",
            "discord_fraction",
            "coherence_fraction",
            "bell_fraction",
        ],
    );
    for &eta in &cfg.eta_values {
        let rows: Vec<&SampleRecord> = by_eta(&records, eta).collect();
        let n = rows.len() as f64;
        let frac =
            |f: &dyn Fn(&SampleRecord) -> bool| rows.iter().filter(|r| f(r)).count() as f64 / n;
        table.push(vec![
            eta.into(),
            rows.len().into(),
            frac(&|r| r.discord.unwrap_or(0.0) > DOS_DISCORD_THRESHOLD).into(),
            frac(&|r| r.coherence.unwrap_or(0.0) > DOS_COHERENCE_THRESHOLD).into(),
            frac(&|r| r.bell.unwrap_or(0.0) > DOS_BELL_THRESHOLD).into(),
        ]);
    }
    Ok(RecordSet {
        records,
        summary: vec![table],
    })
}

/// Full purification runs; η is free unless the grid holds one value.
pub fn run_purification(cfg: &ExperimentConfig) -> Result<RecordSet> {
    let opts = PurificationOptions {
        eta_mode: match cfg.eta_values.first() {
            Some(&eta) => EtaMode::Fixed(eta),
            None => EtaMode::Free,
        },
        ..Default::default()
    };
    let traces = par_samples(cfg.samples, |k| {
        let mut rng = RngStream::new(cfg.seed, k);
        let rho0 = cfg.control_sampler.draw(&mut rng)?;
        let u1 = haar_unitary(2, &mut rng)?;
        purification_run_with(&rho0, &u1, &opts)
    })?;

    let mut records = Vec::new();
    let mut runs = Table::new("runs", &["sample_index", "steps", "converged"]);
    for (k, trace) in traces.iter().enumerate() {
        runs.push(vec![
            k.into(),
            trace.steps.len().into(),
            usize::from(trace.converged).into(),
        ]);
        for s in &trace.steps {
            records.push(SampleRecord {
                sample_index: k as u64,
                step_index: Some(s.step_index as u64),
                eta: Some(s.filter.eta),
                bell: Some(s.bell),
                negativity: Some(s.negativity),
                discord: Some(s.discord),
                coherence: Some(s.coherence),
                purity_aux: Some(s.aux_purity),
                success_probability: Some(s.success_probability),
                fidelity: None,
            });
        }
    }

    let longest = traces.iter().map(|t| t.steps.len()).max().unwrap_or(0);
    let mut per_step = Table::new(
        "per_step",
        &[
            "step_index",
            "runs",
            "bell",
            "negativity",
            "discord",
            "coherence",
            "purity_aux",
        ],
    );
    for step in 1..=longest {
        let at: Vec<_> = traces
            .iter()
            .filter_map(|t| t.steps.get(step - 1))
            .collect();
        let n = at.len() as f64;
        let mean = |f: fn(&crate::purifier::PurificationStep) -> f64| {
            Cell::from(at.iter().map(|s| f(s)).sum::<f64>() / n)
        };
        per_step.push(vec![
            step.into(),
            at.len().into(),
            mean(|s| s.bell),
            mean(|s| s.negativity),
            mean(|s| s.discord),
            mean(|s| s.coherence),
            mean(|s| s.aux_purity),
        ]);
    }

    let n = traces.len() as f64;
    let converged: Vec<f64> = traces
        .iter()
        .filter(|t| t.converged)
        .map(|t| t.steps.len() as f64)
        .collect();
    let (mean_steps, se_steps) = if converged.is_empty() {
        (0.0, 0.0)
    } else {
        mean_and_std_error(&converged)
    };
    let finals: Vec<_> = traces.iter().filter_map(|t| t.final_step()).collect();
    let overview = {
        let mut t = Table::new(
            "overview",
            &[
                "runs",
                "converged_fraction",
                "mean_steps_converged",
                "std_error_steps",
                "final_bell_above_2_fraction",
                "final_negativity_normalized_mean",
                "final_coherence_mean",
            ],
        );
        t.push(vec![
            traces.len().into(),
            (converged.len() as f64 / n).into(),
            mean_steps.into(),
            se_steps.into(),
            (finals
                .iter()
                .filter(|s| s.bell > 2.0 + BELL_VIOLATION_TOL)
                .count() as f64
                / n)
                .into(),
            (finals.iter().map(|s| s.negativity).sum::<f64>()
                / n
                / Measure::Negativity.max_value())
            .into(),
            (finals.iter().map(|s| s.coherence).sum::<f64>() / n).into(),
        ]);
        t
    };
    Ok(RecordSet {
        records,
        summary: vec![overview, per_step, runs],
    })
}
