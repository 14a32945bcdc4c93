use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

#[derive(Debug)]
pub enum CliError {
    /// Bad config, parameters or input file contents (exit 2).
    Config(String),
    /// Reading or writing a file failed (exit 3).
    Io(String),
    /// One or more self-test suites failed (exit 1).
    SelfTest(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::SelfTest(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::SelfTest(m) => write!(f, "selftest failed: {m}"),
        }
    }
}

impl From<photon_fringes::Error> for CliError {
    fn from(e: photon_fringes::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "photon-fringes", version, about = "Two-atom photon interference patterns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for output files (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scan {
    /// Vary theta at fixed phi.
    Theta,
    /// Vary phi at fixed theta.
    Phi,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analytic steady-state emission map.
    Pattern(RunArgs),
    /// Monte Carlo click stream and its direction histogram.
    Simulate(RunArgs),
    /// Classical two-dipole intensity map.
    Classical(RunArgs),
    /// Fringe visibility along a cut of a map CSV.
    Visibility {
        /// Map CSV written by pattern, simulate or classical.
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_enum, default_value = "theta")]
        scan: Scan,
        /// Fixed angle of the cut in radians [default: pi/2].
        #[arg(long, conflicts_with = "at_index")]
        at_angle: Option<f64>,
        /// Fixed grid index of the cut.
        #[arg(long)]
        at_index: Option<usize>,
        /// Moving-average window for extremum detection [default: 3 for histograms, else 0].
        #[arg(long)]
        smoothing: Option<usize>,
    },
    /// Runs the invariant suites at reduced sizes.
    Selftest {
        #[arg(long, hide = true)]
        fault_steady_state: bool,
        #[arg(long, hide = true)]
        fault_envelope: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pattern(a) => commands::pattern(&a.config, a.seed, &a.out),
        Command::Simulate(a) => commands::simulate(&a.config, a.seed, &a.out),
        Command::Classical(a) => commands::classical(&a.config, a.seed, &a.out),
        Command::Visibility { map, scan, at_angle, at_index, smoothing } => {
            use photon_fringes::screen::{CutAt, CutSpec};
            let at = match at_index {
                Some(i) => CutAt::Index(i),
                None => CutAt::Angle(at_angle.unwrap_or(std::f64::consts::FRAC_PI_2)),
            };
            let cut = match scan {
                Scan::Theta => CutSpec::ThetaScan(at),
                Scan::Phi => CutSpec::PhiScan(at),
            };
            commands::visibility(&map, cut, smoothing)
        }
        Command::Selftest { fault_steady_state, fault_envelope } => {
            commands::selftest(photon_fringes::selftest::Faults {
                steady_state: fault_steady_state,
                envelope: fault_envelope,
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("photon-fringes: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
