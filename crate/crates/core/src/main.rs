use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use dqc1::harness::{self, validate, ConfigFile, Experiment, ExperimentConfig, OutputFormat};
use dqc1::sampling::{parse_seed, ControlSampler};
use dqc1::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "dqc1", version, about = "Two-qubit DQC1 circuit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correlations of unfiltered outputs with a maximally mixed auxiliary qubit.
    StandardScatter(RunArgs),
    /// Fidelity between pairs of randomly filtered outputs, per η.
    FidelityBenchmark(RunArgs),
    /// Mean optimal auxiliary purity at fixed η.
    PurityVsEta(RunArgs),
    /// Normalized correlations binned by auxiliary purity.
    CorrelationsVsPurity(RunArgs),
    /// Fraction of filtered states beating the unfiltered maxima, per η.
    DensityOfStates(RunArgs),
    /// Repeated purification of the auxiliary qubit (η free unless one --eta is given).
    Purification(RunArgs),
    /// Run the randomized invariant checks of every module.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated η values in [0, 1].
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    /// Decimal or 0x-prefixed hexadecimal.
    #[arg(long, value_parser = seed_arg)]
    seed: Option<u64>,
    /// pure, hs or alpha=<value>.
    #[arg(long, value_parser = sampler_arg)]
    control_sampler: Option<ControlSampler>,
    #[arg(long, env = "DQC1_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json; inferred from --out when omitted.
    #[arg(long, value_parser = format_arg)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_parser = seed_arg, default_value = "1")]
    seed: u64,
    /// Random draws per check.
    #[arg(long, default_value_t = 500)]
    samples: usize,
}

fn seed_arg(s: &str) -> Result<u64, String> {
    parse_seed(s).map_err(|e| e.to_string())
}

fn sampler_arg(s: &str) -> Result<ControlSampler, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn format_arg(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidInput(_) => EXIT_INVALID_CONFIG,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

fn build_config(experiment: Experiment, args: RunArgs) -> dqc1::Result<ExperimentConfig> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(named) = file.experiment {
        if named != experiment {
            return Err(dqc1::Error::InvalidInput(format!(
                "config file is for {named}, command is {experiment}"
            )));
        }
    }
    let format_given = args.format.is_some() || file.output_format.is_some();
    let mut cfg = file.apply(ExperimentConfig::new(experiment));
    let overrides = ConfigFile {
        experiment: None,
        samples: args.samples,
        eta_values: args.eta,
        seed: args.seed,
        control_sampler: args.control_sampler,
        workers: args.workers,
        output_path: args.out,
        output_format: args.format,
    };
    cfg = overrides.apply(cfg);
    if !format_given {
        let json = cfg
            .output_path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        cfg.output_format = if json {
            OutputFormat::Json
        } else {
            OutputFormat::Csv
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_experiment(experiment: Experiment, args: RunArgs) -> dqc1::Result<()> {
    let cfg = build_config(experiment, args)?;
    let start = Instant::now();
    let set = harness::run(&cfg)?;
    let files = harness::emit(&set, &cfg, start.elapsed())?;
    eprintln!(
        "{experiment}: {} records in {:.1}s -> {}",
        set.records.len(),
        start.elapsed().as_secs_f64(),
        files.data.display()
    );
    Ok(())
}

fn run_validate(args: ValidateArgs) -> ExitCode {
    let outcomes = validate::run_validation(args.seed, args.samples);
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} [{}] {}: {}", o.module, o.name, o.detail);
    }
    println!("{} checks, {failed} failed", outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (experiment, args) = match cli.command {
        Command::Validate(args) => return run_validate(args),
        Command::StandardScatter(a) => (Experiment::StandardScatter, a),
        Command::FidelityBenchmark(a) => (Experiment::FidelityBenchmark, a),
        Command::PurityVsEta(a) => (Experiment::PurityVsEta, a),
        Command::CorrelationsVsPurity(a) => (Experiment::CorrelationsVsPurity, a),
        Command::DensityOfStates(a) => (Experiment::DensityOfStates, a),
        Command::Purification(a) => (Experiment::Purification, a),
    };
    match run_experiment(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
