use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spectral_cns::harness::{run_experiment, Experiment, ExperimentConfig, RunReport};
use spectral_cns::Error;

#[derive(Parser)]
#[command(name = "spectral-cns", version, about = "Littlewood-Paley toolbox and compressible Navier-Stokes experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition of unity, quasi-orthogonality and reconstruction.
    LpCheck(RunArgs),
    /// Bony decomposition exactness.
    ParaCheck(RunArgs),
    /// Linear model problems.
    Linear {
        #[arg(value_enum)]
        model: LinearModel,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Nonlinear small-data run.
    CnsRun(RunArgs),
    /// Iterative local existence scheme.
    LocalScheme(RunArgs),
    /// Flow map, coordinate change and Lagrangian fixed point.
    LagrangianCheck(RunArgs),
    /// Low Mach number sweep.
    LowMach(RunArgs),
    /// Long-time decay run.
    Decay(RunArgs),
    /// Prints the summary of a written report.
    Report {
        /// Report directory or `report.json` path.
        path: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LinearModel {
    Heat,
    Transport,
    Lame,
    Modes,
    DecayProfile,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; the experiment preset is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.json, CSV tables and plots.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "on")]
    svg: Toggle,
}

enum Failure {
    Numerical(String),
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

fn accepts(expected: &[Experiment], cfg: &ExperimentConfig) -> Result<(), Failure> {
    if expected.contains(&cfg.experiment) {
        Ok(())
    } else {
        Err(Failure::Config(format!(
            "config is for experiment `{}`, expected `{}`",
            cfg.experiment.name(),
            expected[0].name()
        )))
    }
}

fn run(expected: &[Experiment], args: &RunArgs) -> Result<bool, Failure> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::preset(expected[0], args.seed.unwrap_or(1)),
    };
    accepts(expected, &cfg)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let report = run_experiment(&cfg)?;
    if let Some(dir) = &args.out {
        report.write(dir, args.svg == Toggle::On)?;
    }
    println!("{}", report.summary());
    Ok(report.passed())
}

fn show(path: &PathBuf) -> Result<bool, Failure> {
    let file = if path.is_dir() { path.join("report.json") } else { path.clone() };
    let report = RunReport::load(&file)?;
    println!("{}", report.summary());
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::LpCheck(a) => run(&[Experiment::LpCheck], a),
        Command::ParaCheck(a) => run(&[Experiment::ParaCheck], a),
        Command::Linear { model, run: a } => {
            let expected: &[Experiment] = match model {
                LinearModel::Heat => &[Experiment::LinearHeat, Experiment::HeatSmoke],
                LinearModel::Transport => &[Experiment::LinearTransport],
                LinearModel::Lame => &[Experiment::LinearLame],
                LinearModel::Modes => &[Experiment::LinearModes],
                LinearModel::DecayProfile => &[Experiment::LinearDecayProfile],
            };
            run(expected, a)
        }
        Command::CnsRun(a) => run(&[Experiment::CnsRun], a),
        Command::LocalScheme(a) => run(&[Experiment::LocalScheme], a),
        Command::LagrangianCheck(a) => run(&[Experiment::LagrangianCheck], a),
        Command::LowMach(a) => run(&[Experiment::LowMach], a),
        Command::Decay(a) => run(&[Experiment::Decay], a),
        Command::Report { path } => show(path),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
    }
}
