//! Filter optimization for purifying the auxiliary qubit, and the iterated
//! purification procedure that feeds the purified auxiliary state back
//! into the circuit.

pub mod nelder_mead;

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    apply_filter, dqc1_output, filter_gram, filtered_aux_marginal, standard_output, FilterSpec,
    ANNIHILATION_THRESHOLD,
};
use crate::correlations::Correlations;
use crate::error::{Error, Result};
use crate::qla::{partial_trace, purity, purity_raw, DensityMatrix, Subsystem, UnitaryMatrix};
use crate::sampling::{haar_unitary, ControlSampler, RngStream};
use nelder_mead::{minimize, NelderMeadOptions};

/// Filters whose purities differ by less than this are considered tied;
/// ties go to the larger η.
pub const TIE_TOL: f64 = 1e-9;

/// Whether η is searched or held fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaMode {
    Free,
    Fixed(f64),
}

/// Multi-start grid and local search settings.
#[derive(Clone, Debug)]
pub struct OptimizerConfig {
    /// Number of Fibonacci-sphere starting directions for `|u⟩`.
    pub directions: usize,
    /// Starting η values in free mode.
    pub eta_starts: Vec<f64>,
    pub local: NelderMeadOptions,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            directions: 64,
            eta_starts: (0..7).map(|k| 0.05 + 0.15 * k as f64).collect(),
            local: NelderMeadOptions::default(),
        }
    }
}

/// Best filter found for a state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizedFilter {
    pub spec: FilterSpec,
    pub aux_purity: f64,
    pub success_probability: f64,
}

/// Directions `(θ, φ)` spread evenly over the Bloch sphere.
pub fn fibonacci_sphere(count: usize) -> Vec<(f64, f64)> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            (
                z.clamp(-1.0, 1.0).acos(),
                (golden * i as f64).rem_euclid(TAU),
            )
        })
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Purity of the auxiliary marginal after filtering, with its success
/// probability; `None` when the filter annihilates the state.
fn filtered_aux_purity(rho: &DensityMatrix, spec: &FilterSpec) -> Option<(f64, f64)> {
    let gram = filter_gram(spec.eta, spec.direction());
    let (p, aux) = filtered_aux_marginal(rho.matrix(), &gram);
    if !(p >= ANNIHILATION_THRESHOLD) {
        return None;
    }
    Some((purity_raw(&aux) / (p * p), p))
}

fn better(candidate: &OptimizedFilter, incumbent: &OptimizedFilter) -> bool {
    let gain = candidate.aux_purity - incumbent.aux_purity;
    gain > TIE_TOL || (gain.abs() <= TIE_TOL && candidate.spec.eta > incumbent.spec.eta)
}

/// Filter maximizing the auxiliary purity with the default search grid.
pub fn optimize_filter(rho_bf: &DensityMatrix, eta_mode: EtaMode) -> Result<OptimizedFilter> {
    optimize_filter_with(rho_bf, eta_mode, &OptimizerConfig::default())
}

pub fn optimize_filter_with(
    rho_bf: &DensityMatrix,
    eta_mode: EtaMode,
    config: &OptimizerConfig,
) -> Result<OptimizedFilter> {
    if rho_bf.dim() != 4 {
        return Err(Error::invalid(
            "filter optimization needs a two-qubit state",
        ));
    }
    if let EtaMode::Fixed(eta) = eta_mode {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!(
                "fixed eta must lie in [0, 1], got {eta}"
            )));
        }
    }
    if config.directions == 0 {
        return Err(Error::invalid(
            "optimizer needs at least one start direction",
        ));
    }

    let evaluate = |spec: FilterSpec| {
        filtered_aux_purity(rho_bf, &spec).map(|(aux_purity, success_probability)| {
            OptimizedFilter {
                spec,
                aux_purity,
                success_probability,
            }
        })
    };
    let mut best: Option<OptimizedFilter> = None;
    let mut offer = |cand: Option<OptimizedFilter>| {
        if let Some(c) = cand {
            if best.as_ref().is_none_or(|b| better(&c, b)) {
                best = Some(c);
            }
        }
    };

    let directions = fibonacci_sphere(config.directions);
    match eta_mode {
        EtaMode::Fixed(eta) => {
            for &(theta, phi) in &directions {
                offer(evaluate(FilterSpec::canonical(eta, theta, phi)));
            }
            for &(theta, phi) in &directions {
                let m = minimize(
                    |x| match filtered_aux_purity(rho_bf, &FilterSpec::canonical(eta, x[0], x[1])) {
                        Some((p, _)) => -p,
                        None => f64::INFINITY,
                    },
                    &[theta, phi],
                    &config.local,
                );
                offer(evaluate(FilterSpec::canonical(eta, m.x[0], m.x[1])));
            }
        }
        EtaMode::Free => {
            offer(evaluate(FilterSpec::identity()));
            for &eta0 in &config.eta_starts {
                for &(theta, phi) in &directions {
                    let m = minimize(
                        |x| {
                            let spec = FilterSpec::canonical(sigmoid(x[2]), x[0], x[1]);
                            match filtered_aux_purity(rho_bf, &spec) {
                                Some((p, _)) => -p,
                                None => f64::INFINITY,
                            }
                        },
                        &[theta, phi, logit(eta0)],
                        &config.local,
                    );
                    offer(evaluate(FilterSpec::canonical(
                        sigmoid(m.x[2]),
                        m.x[0],
                        m.x[1],
                    )));
                }
            }
        }
    }
    best.ok_or_else(|| {
        Error::OptimizationFailed("every candidate filter annihilated the state".into())
    })
}

/// Mean and standard error of the optimal auxiliary purity at one η.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityAtEta {
    pub eta: f64,
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Optimal auxiliary purity of sample `index` with η held fixed.
pub fn max_purity_sample(
    sampler: ControlSampler,
    seed: u64,
    index: u64,
    eta: f64,
    config: &OptimizerConfig,
) -> Result<f64> {
    let mut rng = RngStream::new(seed, index);
    let rho0 = sampler.draw(&mut rng)?;
    let u1 = haar_unitary(2, &mut rng)?;
    let bf = standard_output(&rho0, &u1)?;
    Ok(optimize_filter_with(&bf, EtaMode::Fixed(eta), config)?.aux_purity)
}

/// For each η: average over `samples` draws of `(ρ0, U1)` of the best
/// auxiliary purity reachable with η fixed. Sample `k` uses stream `k`
/// for every η.
pub fn avg_max_purity_vs_eta(
    eta_grid: &[f64],
    samples: usize,
    sampler: ControlSampler,
    seed: u64,
) -> Result<Vec<PurityAtEta>> {
    avg_max_purity_vs_eta_with(
        eta_grid,
        samples,
        sampler,
        seed,
        &OptimizerConfig::default(),
    )
}

pub fn avg_max_purity_vs_eta_with(
    eta_grid: &[f64],
    samples: usize,
    sampler: ControlSampler,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<Vec<PurityAtEta>> {
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    eta_grid
        .iter()
        .map(|&eta| {
            let values: Vec<f64> = (0..samples as u64)
                .into_par_iter()
                .map(|k| max_purity_sample(sampler, seed, k, eta, config))
                .collect::<Result<_>>()?;
            let (mean, std_error) = mean_and_std_error(&values);
            Ok(PurityAtEta {
                eta,
                mean,
                std_error,
                samples,
            })
        })
        .collect()
}

pub(crate) fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One iteration of the purification procedure; the correlations are
/// those of the post-selected two-qubit state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PurificationStep {
    pub step_index: usize,
    pub filter: FilterSpec,
    pub success_probability: f64,
    pub aux_purity: f64,
    pub bell: f64,
    pub negativity: f64,
    pub discord: f64,
    pub coherence: f64,
}

#[derive(Clone, Debug)]
pub struct PurificationTrace {
    pub rho0: DensityMatrix,
    pub u1: UnitaryMatrix,
    pub steps: Vec<PurificationStep>,
    pub converged: bool,
}

impl PurificationTrace {
    pub fn final_step(&self) -> Option<&PurificationStep> {
        self.steps.last()
    }
}

pub const DEFAULT_TARGET_PURITY: f64 = 0.99;
pub const DEFAULT_MAX_STEPS: usize = 50;
/// Slack on the target when deciding whether a run converged.
const CONVERGENCE_SLACK: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct PurificationOptions {
    pub target_purity: f64,
    pub max_steps: usize,
    pub eta_mode: EtaMode,
    pub optimizer: OptimizerConfig,
}

impl Default for PurificationOptions {
    fn default() -> Self {
        Self {
            target_purity: DEFAULT_TARGET_PURITY,
            max_steps: DEFAULT_MAX_STEPS,
            eta_mode: EtaMode::Free,
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// Iterate filter optimization, feeding the purified auxiliary state back
/// into the circuit, until the auxiliary purity reaches `target_purity`.
pub fn purification_run(
    rho0: &DensityMatrix,
    u1: &UnitaryMatrix,
    target_purity: f64,
    max_steps: usize,
) -> Result<PurificationTrace> {
    purification_run_with(
        rho0,
        u1,
        &PurificationOptions {
            target_purity,
            max_steps,
            ..Default::default()
        },
    )
}

pub fn purification_run_with(
    rho0: &DensityMatrix,
    u1: &UnitaryMatrix,
    opts: &PurificationOptions,
) -> Result<PurificationTrace> {
    if !(opts.target_purity > 0.5 && opts.target_purity < 1.0) {
        return Err(Error::invalid(format!(
            "target purity must lie in (0.5, 1), got {}",
            opts.target_purity
        )));
    }
    if opts.max_steps == 0 {
        return Err(Error::invalid("max_steps must be at least one"));
    }
    let mut aux = DensityMatrix::maximally_mixed(2)?;
    let mut steps = Vec::new();
    for step_index in 1..=opts.max_steps {
        let bf = dqc1_output(rho0, u1, &aux)?;
        let best = optimize_filter_with(&bf, opts.eta_mode, &opts.optimizer)?;
        let filtered = apply_filter(&bf, &best.spec)?;
        let corr = Correlations::of(&filtered.state)?;
        aux = partial_trace(&filtered.state, Subsystem::Auxiliary)?;
        let aux_purity = purity(&aux);
        steps.push(PurificationStep {
            step_index,
            filter: best.spec,
            success_probability: filtered.success_probability,
            aux_purity,
            bell: corr.bell,
            negativity: corr.negativity,
            discord: corr.discord,
            coherence: corr.coherence,
        });
        if aux_purity >= opts.target_purity {
            break;
        }
    }
    let converged = steps
        .last()
        .is_some_and(|s| s.aux_purity >= opts.target_purity - CONVERGENCE_SLACK);
    Ok(PurificationTrace {
        rho0: *rho0,
        u1: *u1,
        steps,
        converged,
    })
}
