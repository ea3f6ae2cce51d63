//! Experiment orchestration: configuration, per-sample records, summary
//! tables and file emission.
//!
//! Every experiment is a pure function of its configuration. Sample `k`
//! draws from RNG stream `k`, samples are evaluated on a bounded worker
//! pool and collected in index order, so the worker count never changes
//! the output.

mod emit;
mod experiments;
pub mod validate;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::ControlSampler;

pub use emit::{emit, read_csv_records, read_csv_table, read_json, EmittedFiles, JsonOutput};
pub use experiments::{
    run_correlations_vs_purity, run_density_of_states, run_fidelity_benchmark, run_purification,
    run_purity_vs_eta, run_standard_scatter, BELL_VIOLATION_TOL, DOS_BELL_THRESHOLD,
    DOS_COHERENCE_THRESHOLD, DOS_DISCORD_THRESHOLD, FIDELITY_BINS, PURITY_BINS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    StandardScatter,
    FidelityBenchmark,
    PurityVsEta,
    CorrelationsVsPurity,
    DensityOfStates,
    Purification,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::StandardScatter,
        Experiment::FidelityBenchmark,
        Experiment::PurityVsEta,
        Experiment::CorrelationsVsPurity,
        Experiment::DensityOfStates,
        Experiment::Purification,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::StandardScatter => "standard-scatter",
            Experiment::FidelityBenchmark => "fidelity-benchmark",
            Experiment::PurityVsEta => "purity-vs-eta",
            Experiment::CorrelationsVsPurity => "correlations-vs-purity",
            Experiment::DensityOfStates => "density-of-states",
            Experiment::Purification => "purification",
        }
    }

    /// Control ensemble used when the configuration does not name one.
    ///
    /// The scatter and the density of states use mixed Hilbert-Schmidt
    /// states: the density-of-states thresholds are the maxima of that
    /// ensemble, so the identity filter must not exceed them.
    pub fn default_sampler(self) -> ControlSampler {
        match self {
            Experiment::StandardScatter | Experiment::DensityOfStates => ControlSampler::MixedHs,
            _ => ControlSampler::PureHaar,
        }
    }

    /// η grid used when the configuration does not give one. Purification
    /// defaults to an empty grid, meaning η is optimized freely.
    pub fn default_eta_values(self) -> Vec<f64> {
        let grid = |n: usize| (0..=n).map(|i| i as f64 / n as f64).collect::<Vec<_>>();
        match self {
            Experiment::StandardScatter | Experiment::Purification => Vec::new(),
            Experiment::FidelityBenchmark => vec![0.0, 0.5, 1.0],
            Experiment::PurityVsEta => grid(20),
            Experiment::CorrelationsVsPurity => grid(20),
            Experiment::DensityOfStates => grid(4),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown experiment {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid(format!("unknown output format {other:?}"))),
        }
    }
}

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub samples: usize,
    pub eta_values: Vec<f64>,
    pub seed: u64,
    pub control_sampler: ControlSampler,
    pub workers: usize,
    pub output_path: PathBuf,
    pub output_format: OutputFormat,
}

impl ExperimentConfig {
    /// Defaults for `experiment`: desk-scale sample count, the
    /// experiment's own η grid and control ensemble, every available core.
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            samples: DEFAULT_SAMPLES,
            eta_values: experiment.default_eta_values(),
            seed: DEFAULT_SEED,
            control_sampler: experiment.default_sampler(),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            output_path: PathBuf::from(format!("{experiment}.csv")),
            output_format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("samples must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers must be at least 1"));
        }
        if let Some(eta) = self.eta_values.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::invalid(format!("eta {eta} is outside [0, 1]")));
        }
        let mut sorted = self.eta_values.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("eta values must be distinct"));
        }
        match self.experiment {
            Experiment::StandardScatter => {}
            Experiment::Purification => {
                if self.eta_values.len() > 1 {
                    return Err(Error::invalid(
                        "purification takes at most one eta (none means free eta)",
                    ));
                }
            }
            _ => {
                if self.eta_values.is_empty() {
                    return Err(Error::invalid(format!(
                        "{} needs an eta grid",
                        self.experiment
                    )));
                }
            }
        }
        if let ControlSampler::Alpha(a) = self.control_sampler {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::invalid(format!("alpha {a} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// The fields that determine the data; worker count and output
    /// location are left out so that data files do not depend on them.
    pub fn data_view(&self) -> DataConfig {
        DataConfig {
            experiment: self.experiment,
            samples: self.samples,
            eta_values: self.eta_values.clone(),
            seed: self.seed,
            control_sampler: self.control_sampler,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub experiment: Experiment,
    pub samples: usize,
    pub eta_values: Vec<f64>,
    pub seed: u64,
    pub control_sampler: ControlSampler,
}

/// Configuration file contents; every field is optional and overrides the
/// experiment defaults. Command-line flags in turn override the file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub samples: Option<usize>,
    pub eta_values: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub control_sampler: Option<ControlSampler>,
    pub workers: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<OutputFormat>,
}

impl ConfigFile {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("config file {}: {e}", path.display())))
    }

    /// Layer `self` over `base`.
    pub fn apply(&self, mut base: ExperimentConfig) -> ExperimentConfig {
        if let Some(v) = self.samples {
            base.samples = v;
        }
        if let Some(v) = &self.eta_values {
            base.eta_values = v.clone();
        }
        if let Some(v) = self.seed {
            base.seed = v;
        }
        if let Some(v) = self.control_sampler {
            base.control_sampler = v;
        }
        if let Some(v) = self.workers {
            base.workers = v;
        }
        if let Some(v) = &self.output_path {
            base.output_path = v.clone();
        }
        if let Some(v) = self.output_format {
            base.output_format = v;
        }
        base
    }
}

/// One emitted row. Fields an experiment does not produce are empty.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_index: u64,
    pub step_index: Option<u64>,
    pub eta: Option<f64>,
    pub bell: Option<f64>,
    pub negativity: Option<f64>,
    pub discord: Option<f64>,
    pub coherence: Option<f64>,
    pub purity_aux: Option<f64>,
    pub success_probability: Option<f64>,
    pub fidelity: Option<f64>,
}

impl SampleRecord {
    pub const FIELDS: [&'static str; 10] = [
        "sample_index",
        "step_index",
        "eta",
        "bell",
        "negativity",
        "discord",
        "coherence",
        "purity_aux",
        "success_probability",
        "fidelity",
    ];

    pub(crate) fn reals(&self) -> [Option<f64>; 8] {
        [
            self.eta,
            self.bell,
            self.negativity,
            self.discord,
            self.coherence,
            self.purity_aux,
            self.success_probability,
            self.fidelity,
        ]
    }

    pub(crate) fn with_correlations(mut self, c: &crate::correlations::Correlations) -> Self {
        self.bell = Some(c.bell);
        self.negativity = Some(c.negativity);
        self.discord = Some(c.discord);
        self.coherence = Some(c.coherence);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl Cell {
    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Int(i) => i as f64,
            Cell::Real(x) => x,
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

/// A named aggregate table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordSet {
    pub records: Vec<SampleRecord>,
    pub summary: Vec<Table>,
}

impl RecordSet {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.summary.iter().find(|t| t.name == name)
    }
}

/// Validate `cfg` and run its experiment on a pool of `cfg.workers` threads.
pub fn run(cfg: &ExperimentConfig) -> Result<RecordSet> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
    pool.install(|| match cfg.experiment {
        Experiment::StandardScatter => run_standard_scatter(cfg),
        Experiment::FidelityBenchmark => run_fidelity_benchmark(cfg),
        Experiment::PurityVsEta => run_purity_vs_eta(cfg),
        Experiment::CorrelationsVsPurity => run_correlations_vs_purity(cfg),
        Experiment::DensityOfStates => run_density_of_states(cfg),
        Experiment::Purification => run_purification(cfg),
    })
}
