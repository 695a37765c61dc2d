use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use magedge::experiments::DecayModel;
use magedge::io::{
    exit_code, parse_config, run_subcommand, ErrorRecord, Overrides, RunConfig, Subcommand,
};
use magedge::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Dispersion,
    Spectrum,
    Classify,
    Theorem1,
    Theorem2,
    FluxScan,
    Fit,
    SelfTest,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Dispersion => Subcommand::Dispersion,
            Command::Spectrum => Subcommand::Spectrum,
            Command::Classify => Subcommand::Classify,
            Command::Theorem1 => Subcommand::Theorem1,
            Command::Theorem2 => Subcommand::Theorem2,
            Command::FluxScan => Subcommand::FluxScan,
            Command::Fit => Subcommand::Fit,
            Command::SelfTest => Subcommand::SelfTest,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    LogSq,
    Sqrt,
}

/// Edge and bulk spectra of a disordered magnetic cylinder with soft walls.
///
/// Exit status: 0 success, 2 configuration error, 3 solver failure budget
/// exceeded, 1 anything else.
#[derive(Debug, Parser)]
#[command(name = "magedge", version)]
struct Cli {
    command: Command,
    /// Experiment config (JSON) or the manifest of an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; `self-test` checks the CSV files found there.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Number of seeds, `0..N`.
    #[arg(long, conflicts_with = "seed_list")]
    seeds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    #[arg(long)]
    workers: Option<usize>,
    /// Energy window override `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    window: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    flux: Option<f64>,
    /// Lengths for a sweep, e.g. `8,12,16`.
    #[arg(long = "L-list", value_delimiter = ',')]
    l_list: Option<Vec<f64>>,
    /// Report directory for `fit`; repeatable.
    #[arg(long)]
    input: Vec<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<Model>,
}

fn overrides(cli: &Cli) -> Result<Overrides, Error> {
    let window = match cli.window.as_deref() {
        None => None,
        Some(&[lo, hi]) => Some([lo, hi]),
        Some(_) => {
            return Err(Error::Config {
                path: "--window".to_string(),
                message: "expected two values lo,hi".to_string(),
            })
        }
    };
    Ok(Overrides {
        seeds: cli.seeds,
        seed_list: cli.seed_list.clone(),
        workers: cli.workers,
        window,
        flux: cli.flux,
        l_list: cli.l_list.clone(),
        fit_inputs: (!cli.input.is_empty()).then(|| cli.input.clone()),
        fit_model: cli.model.map(|m| match m {
            Model::LogSq => DecayModel::LogSq,
            Model::Sqrt => DecayModel::Sqrt,
        }),
    })
}

fn run(cli: &Cli) -> Result<(), Error> {
    let sub = Subcommand::from(cli.command);
    let mut config = match &cli.config {
        Some(path) => parse_config(path)?,
        None if sub.needs_model() => {
            return Err(Error::Config {
                path: "--config".to_string(),
                message: format!("{} needs a config file", sub.as_str()),
            })
        }
        None => RunConfig::default(),
    };
    config.apply(&overrides(cli)?);
    let outcome = run_subcommand(sub, &config, &cli.out)?;
    eprintln!(
        "{}: {} seeds, {} failed, {} files under {}",
        sub.as_str(),
        outcome.seeds_run,
        outcome.failures,
        outcome.files.len(),
        cli.out.display()
    );
    Ok(())
}

fn report_error(e: &Error, out: &Path) -> ExitCode {
    let record = ErrorRecord::from_error(e);
    let json = record.to_json();
    eprintln!("{json}");
    if std::fs::create_dir_all(out).is_ok() {
        let _ = std::fs::write(out.join("error.json"), json + "\n");
    }
    ExitCode::from(exit_code(e) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(&e, &cli.out),
    }
}
