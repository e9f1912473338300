//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dissipative_core::sweep::SolverChoice;
use dissipative_core::FitKind;
use serde::Serialize;

use crate::commands::{self, FitArgs, FitExtremum, FitX, FitY, RunArgs};
use crate::config::ModelKind;
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(
    name = "dissipative",
    version,
    about = "Steady-state susceptibility sweeps of open quantum systems"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// χ_F / χ_T sweep of the dissipative XYZ lattice.
    XyzSweep(RunFlags),
    /// χ_F / χ_T sweep of the two-photon driven Kerr oscillator, with the
    /// Liouvillian gap per point.
    KerrSweep(RunFlags),
    /// Mean-field magnetizations or semiclassical field amplitude.
    MfPhase(RunFlags),
    /// Linear stability of the all-down state over the Brillouin zone.
    StabilityMap(RunFlags),
    /// Scaling fit over sweep summaries.
    Fit(FitFlags),
}

#[derive(Debug, Args)]
struct RunFlags {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum SolverArg {
    Ed,
    Rk4,
    Auto,
}

impl From<SolverArg> for SolverChoice {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Ed => SolverChoice::Ed,
            SolverArg::Rk4 => SolverChoice::Rk4,
            SolverArg::Auto => SolverChoice::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum KindArg {
    PowerLaw,
    Linear,
}

#[derive(Debug, Args)]
struct FitFlags {
    /// `summary.json` files of finished sweeps.
    summaries: Vec<PathBuf>,
    /// Fit an `x,y` CSV instead.
    #[arg(long, conflicts_with = "summaries")]
    csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "linear")]
    kind: KindArg,
    #[arg(long, value_enum, default_value = "inverse-n")]
    x: FitX,
    #[arg(long, value_enum, default_value = "p-star")]
    y: FitY,
    #[arg(long, value_enum, default_value = "min-chi-f")]
    extremum: FitExtremum,
    /// Where linear fits are extrapolated to.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    target: f64,
    #[arg(long)]
    out: PathBuf,
}

impl From<RunFlags> for RunArgs {
    fn from(f: RunFlags) -> Self {
        RunArgs {
            config: f.config,
            out: f.out,
            no_cache: f.no_cache,
            solver: f.solver.map(Into::into),
        }
    }
}

/// Echoes the run's summary record; a closed stdout is not an error.
fn print<T: Serialize>(record: &T) {
    let text = serde_json::to_string_pretty(record).expect("records serialize");
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::XyzSweep(f) => print(&commands::run_sweep(&f.into(), ModelKind::Xyz)?),
        Command::KerrSweep(f) => print(&commands::run_sweep(&f.into(), ModelKind::Kerr)?),
        Command::MfPhase(f) => print(&commands::run_mf_phase(&f.into())?),
        Command::StabilityMap(f) => print(&commands::run_stability_map(&f.into())?),
        Command::Fit(f) => {
            let args = FitArgs {
                summaries: f.summaries,
                csv: f.csv,
                kind: match f.kind {
                    KindArg::PowerLaw => FitKind::PowerLaw,
                    KindArg::Linear => FitKind::Linear,
                },
                x: f.x,
                y: f.y,
                extremum: f.extremum,
                target: f.target,
                out: f.out,
            };
            print(&commands::run_fit(&args)?)
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code: 0 on success, 1 for invalid input or runtime
/// errors, 2 when too many sweep points failed.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    commands::install_interrupt_handler();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
