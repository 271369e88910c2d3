//! `procert`: enumerate relevant operators, certify noisy gates, run
//! tomography baselines and sample-count sweeps.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::TableFormat;
use config::{Format, ModeKind, RunConfig, Samples};
use procert::channels::{Gate, NoiseModel, NoisePlacement};
use procert::readout::CalibrationSource;

#[derive(Parser)]
#[command(name = "procert", version, about = "Monte Carlo process certification on simulated gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the relevant Pauli operators of a gate.
    Enumerate(EnumerateArgs),
    /// Estimate the process fidelity of a noisy gate.
    Certify(RunArgs),
    /// Full process tomography with linear inversion and projection.
    Tomography(TomographyArgs),
    /// Estimator spread against the number of sampled operators.
    Sweep(SweepArgs),
    /// Print the resolved run configuration in canonical JSON.
    Config(RunArgs),
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    gate: Gate,
    /// Print only the number of relevant operators.
    #[arg(long)]
    count_only: bool,
    /// Add ideal expectation and relevance columns.
    #[arg(long)]
    values: bool,
    /// Compare against the bundled table; exits 3 on mismatch.
    #[arg(long)]
    golden: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: TableFormat,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    gate: Option<Gate>,
    /// Noise descriptor, e.g. `depolarizing:0.1+overrot:y:0.05:2`.
    #[arg(long)]
    noise: Option<NoiseModel>,
    /// Apply the noise before the gate instead of after it.
    #[arg(long)]
    noise_before: bool,
    #[arg(long, value_enum)]
    mode: Option<ModeKind>,
    /// Readout repetitions per setting in shot mode.
    #[arg(long)]
    shots: Option<u32>,
    /// `all` for the exhaustive sum, or a number of Monte Carlo draws.
    #[arg(long)]
    samples: Option<Samples>,
    /// Draw one input eigenstate per sampled operator.
    #[arg(long)]
    eigenstate_sampling: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// `default`, `randomized:SEED` or `file:PATH`.
    #[arg(long)]
    calibration: Option<CalibrationSource>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Directory for reports when --output is not given.
    #[arg(long, env = "PROCERT_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TomographyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Where to write the measurement records as CSV.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated sample counts.
    #[arg(long, value_delimiter = ',', default_value = "10,25,50,100,200")]
    counts: Vec<usize>,
    /// Independent trials per sample count.
    #[arg(long, default_value_t = 200)]
    trials: usize,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, commands::CliError> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| commands::CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                RunConfig::parse(&text).map_err(commands::CliError::Usage)?
            }
            None => RunConfig::default(),
        };
        if let Some(gate) = self.gate {
            config.gate = gate;
        }
        if let Some(noise) = &self.noise {
            config.noise = noise.clone();
        }
        if self.noise_before {
            config.noise_placement = NoisePlacement::Before;
        }
        if let Some(mode) = self.mode {
            config.mode = mode;
        }
        if let Some(shots) = self.shots {
            config.shots = shots;
        }
        if let Some(samples) = self.samples {
            config.samples = samples;
        }
        if self.eigenstate_sampling {
            config.eigenstate_sampling = true;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(calibration) = &self.calibration {
            config.calibration = calibration.clone();
        }
        if let Some(output) = &self.output {
            config.output = Some(output.clone());
        }
        if let Some(format) = self.format {
            config.format = format;
        }
        config.validate().map_err(commands::CliError::Usage)?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), commands::CliError> {
    match cli.command {
        Command::Enumerate(args) => {
            commands::enumerate(args.gate, args.count_only, args.values, args.golden, args.format)
        }
        Command::Certify(args) => {
            let config = args.resolve()?;
            commands::certify(&config, args.output_dir.as_deref())
        }
        Command::Tomography(args) => {
            let config = args.run.resolve()?;
            commands::tomography(&config, args.run.output_dir.as_deref(), args.records.as_deref())
        }
        Command::Sweep(args) => {
            let config = args.run.resolve()?;
            commands::sweep(&config, args.run.output_dir.as_deref(), &args.counts, args.trials)
        }
        Command::Config(args) => {
            println!("{}", args.resolve()?.render());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
