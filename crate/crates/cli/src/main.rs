use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qctrl_cli::commands::{self, Context, OptimizeArgs};
use qctrl_cli::report::{AnalysisReport, SystemSummary};
use qctrl_cli::spec_file::SystemSpec;
use qctrl_cli::{pulse_file, CliError, Result};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Human,
    Machine,
}

/// Controllability, reachability and control-pulse analysis of finite-level
/// bilinear quantum systems.
#[derive(Debug, Parser)]
#[command(name = "qctrl", version)]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value = "human")]
    format: Format,

    /// Seed for every randomized search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Multiplier applied to all closure tolerances.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,

    /// Write the report to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the dynamical Lie algebra and classify controllability.
    Classify {
        /// System definition file.
        file: PathBuf,
    },
    /// Decide whether one named state can be steered into another.
    Reach {
        file: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Random restarts of the orbit search.
        #[arg(long, default_value_t = 20)]
        restarts: usize,
    },
    /// Maximize an observable's expectation value over control pulses.
    Optimize {
        file: PathBuf,
        /// Observable name; states can be used as observables too.
        #[arg(long)]
        observable: String,
        /// Initial state name.
        #[arg(long)]
        from: String,
        /// Pulse duration T.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        /// Number of piecewise-constant time steps K.
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        /// Write the best pulse to this file.
        #[arg(long)]
        pulse_out: Option<PathBuf>,
    },
    /// Evolve a named state under a pulse read from a file.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        pulse: PathBuf,
        #[arg(long)]
        state: String,
        /// Report the distance of the final state to this named state.
        #[arg(long)]
        target: Option<String>,
        /// Include the final propagator in the report.
        #[arg(long)]
        show_unitary: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Reach { .. } => "reach",
            Command::Optimize { .. } => "optimize",
            Command::Simulate { .. } => "simulate",
        }
    }

    fn file(&self) -> &Path {
        match self {
            Command::Classify { file }
            | Command::Reach { file, .. }
            | Command::Optimize { file, .. }
            | Command::Simulate { file, .. } => file,
        }
    }
}

fn run(cli: Cli) -> Result<String> {
    if !cli.tolerance_scale.is_finite() || cli.tolerance_scale <= 0.0 {
        return Err(CliError::Validation(format!(
            "--tolerance-scale must be positive, got {}",
            cli.tolerance_scale
        )));
    }
    let path = cli.command.file();
    let bytes = std::fs::read(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Validation(format!("{}: not valid UTF-8", path.display())))?;
    let spec = SystemSpec::parse(&text, &path.display().to_string())?;
    let ctx = Context { seed: cli.seed, tolerance_scale: cli.tolerance_scale };

    let summary = SystemSummary {
        label: spec.system.label().to_string(),
        dimension: spec.system.dim(),
        controls: spec.system.controls().len(),
    };
    let mut report = AnalysisReport::new(cli.command.name(), &bytes, cli.seed, cli.tolerance_scale, summary);

    match &cli.command {
        Command::Classify { .. } => {
            report.classification = Some(commands::classify(&spec, &ctx)?);
        }
        Command::Reach { from, to, restarts, .. } => {
            report.reachability = Some(commands::reach(&spec, from, to, *restarts, &ctx)?);
        }
        Command::Optimize { observable, from, duration, steps, restarts, max_iters, pulse_out, .. } => {
            let args = OptimizeArgs {
                observable: observable.clone(),
                from: from.clone(),
                duration: *duration,
                steps: *steps,
                restarts: *restarts,
                max_iters: *max_iters,
            };
            let (mut section, pulse) = commands::optimize(&spec, &args, &ctx)?;
            if let Some(out) = pulse_out {
                pulse_file::save(out, &pulse)?;
                section.pulse_file = Some(out.display().to_string());
            }
            report.optimization = Some(section);
        }
        Command::Simulate { pulse, state, target, show_unitary, .. } => {
            let pulse = pulse_file::load(pulse)?;
            report.simulation = Some(commands::simulate(&spec, &pulse, state, target.as_deref(), *show_unitary)?);
        }
    }

    Ok(match cli.format {
        Format::Human => report.to_human(),
        Format::Machine => report.to_machine(),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { 1 } else { 0 };
            return ExitCode::from(code);
        }
    };
    let out = cli.out.clone();
    let result = run(cli).and_then(|text| match &out {
        Some(path) => std::fs::write(path, &text).map_err(|e| CliError::Io { path: path.clone(), source: e }),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
