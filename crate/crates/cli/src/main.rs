use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

use gridrestore::model::{build_with, BuildOptions};
use gridrestore::oracle::{cross_check, SizeGuard};
use gridrestore::restore::{self, RestoreError, SolveOptions};
use gridrestore::solver::{export_lp, MilpLimits, Status};
use gridrestore::{io, report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Optimize and write plan.json and trajectory.csv.
    Solve,
    /// Compare the optimum against exhaustive enumeration (tiny cases only).
    Verify,
    /// Write the MILP as model.lp.
    ExportLp,
}

/// Schedule line repairs and generator start-up after a blackout.
#[derive(Debug, Parser)]
#[command(name = "gridrestore", version)]
struct Args {
    /// Network case (JSON).
    #[arg(long)]
    case: PathBuf,
    /// Damage scenario (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Solve)]
    mode: Mode,
    /// Relative optimality gap at which branch-and-bound stops.
    #[arg(long, default_value_t = gridrestore::solver::DEFAULT_GAP)]
    gap: f64,
    /// Branch-and-bound node limit. A run that stops here still writes its
    /// best plan but exits with status 2.
    #[arg(long, default_value_t = 10_000)]
    nodes: usize,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Model in-service lines with DC angle constraints (needs reactances).
    #[arg(long)]
    angle_mode: bool,
}

/// Exit code for a run that completed but did not reach a proven optimum,
/// or whose verification failed.
const NOT_OPTIMAL: u8 = 2;
const INPUT_ERROR: u8 = 1;

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}

fn run(args: &Args) -> Result<u8> {
    let case = io::load_case(&args.case)?;
    let scenario = io::load_scenario(&args.scenario, &case)?;
    let mut limits = MilpLimits { gap: args.gap, max_nodes: args.nodes, ..MilpLimits::default() };
    if let Some(secs) = args.time_limit {
        limits.time_limit = Some(Duration::try_from_secs_f64(secs).context("invalid --time-limit")?);
    }
    let build = BuildOptions { angle_mode: args.angle_mode, ..BuildOptions::default() };
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;

    match args.mode {
        Mode::Solve => solve(args, &case, &scenario, SolveOptions { limits, build, ..SolveOptions::default() }),
        Mode::Verify => {
            if args.angle_mode {
                anyhow::bail!("verify compares against the transport model; drop --angle-mode");
            }
            let cert = cross_check(&case, &scenario, &SizeGuard::default(), &limits)?;
            if cert.certified {
                println!("CERTIFIED");
                println!("milp objective:   {}", report::format_mw(cert.milp_objective));
                println!("oracle objective: {}", report::format_mw(cert.oracle_objective));
                Ok(0)
            } else {
                println!("MISMATCH");
                print!("{}", cert.describe());
                Ok(NOT_OPTIMAL)
            }
        }
        Mode::ExportLp => {
            let instance = build_with(&case, &scenario, &build)?;
            let path = args.out.join("model.lp");
            export_lp(&instance.problem, &path).with_context(|| format!("cannot write {}", path.display()))?;
            println!(
                "wrote {} ({} columns, {} rows, {} binaries)",
                path.display(),
                instance.problem.num_columns(),
                instance.problem.num_rows(),
                instance.num_binaries()
            );
            Ok(0)
        }
    }
}

fn solve(
    args: &Args,
    case: &gridrestore::grid::GridCase,
    scenario: &gridrestore::grid::DamageScenario,
    options: SolveOptions,
) -> Result<u8> {
    let outcome = match restore::solve(case, scenario, &options) {
        Ok(o) => o,
        Err(RestoreError::NoSchedule(status)) => {
            eprintln!("no schedule: solver ended with {status}");
            return Ok(NOT_OPTIMAL);
        }
        Err(e) => return Err(e.into()),
    };
    let plan = &outcome.plan;
    write(&args.out.join("plan.json"), |p| io::write_plan(p, plan))?;
    write(&args.out.join("trajectory.csv"), |p| report::write_trajectory(p, plan))?;
    print!("{}", report::summary(plan));
    Ok(match plan.status {
        Status::Optimal | Status::GapLimit => 0,
        _ => NOT_OPTIMAL,
    })
}

fn write(path: &Path, f: impl FnOnce(&Path) -> std::io::Result<()>) -> Result<()> {
    f(path).with_context(|| format!("cannot write {}", path.display()))
}
