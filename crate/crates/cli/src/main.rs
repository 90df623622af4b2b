//! `peakon`: run scenarios, convergence studies and verification suites.

mod check;
mod error;
mod output;
mod run;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use check::Suite;
use error::{CliError, Result};
use output::{prepare_dir, write_file, Format};
use run::Overrides;
use scenario::{Scenario, StudyFile};

#[derive(Debug, Parser)]
#[command(name = "peakon", version, about = "Peakon trajectories of the modified Camassa-Holm equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve one scenario and write its trajectory, energy, events and report.
    Run(RunArgs),
    /// Compare mollified runs against the sticky trajectory over several widths.
    Study(RunArgs),
    /// Run verification suites.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory (falls back to PEAKON_OUT_DIR, then the working directory).
    #[arg(long, env = "PEAKON_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file, or the name of a bundled scenario (fig1a, fig1b, ...).
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Mollifier widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    suite: Vec<Suite>,
    #[arg(long, default_value_t = check::DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

impl Common {
    fn dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides { dt: self.dt, t_end: self.t_end, eps: self.eps.clone() }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => {
            let sc = Scenario::parse(&scenario::load_text(&a.scenario)?)?;
            for p in run::run(&sc, &a.overrides(), &a.common.dir(), a.common.format)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Study(a) => {
            let sf = StudyFile::parse(&scenario::load_text(&a.scenario)?)?;
            let (report, path) = run::study(&sf, &a.overrides(), &a.common.dir(), a.common.format)?;
            for (e, d) in report.eps_values.iter().zip(&report.sup_distances) {
                println!("eps {e:<8} sup distance {d:.6e}");
            }
            println!("wrote {}", path.display());
        }
        Command::Check(a) => {
            let report = check::run_suites(&a.suite, a.seed)?;
            match a.common.format {
                Format::Csv => print!("{}", report.human()),
                Format::Json => print!("{}", output::to_json(&report)?),
            }
            if let Some(dir) = &a.common.out_dir {
                prepare_dir(dir)?;
                write_file(dir, "check_report.json", &output::to_json(&report)?)?;
            }
            if !report.passed {
                return Err(CliError::CheckFailed(report.failures()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
