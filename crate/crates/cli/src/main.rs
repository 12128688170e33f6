//! Command-line front end for the lorenzlab toolkit.
//!
//! Five subcommands cover the pipelines of the core library: `henon`
//! (orbit, exponent spectrum, or attractor label at one parameter point),
//! `sweep` (parallel parameter grids with byte-stable CSV output),
//! `rescale` (convergence ladders of the rescaled return maps, or the
//! flattening diagnostic on the positive twist branch), `powers` (self-test
//! of the closed-form linear-block powers), and `scan-delta` (tracking the
//! candidate parameter boxes along growing passage lengths).
//!
//! Values resolve as flags over config file over built-in defaults. The
//! exit code states what went wrong: `0` success, `2` invalid input or
//! configuration, `3` numerical failure, `4` I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lorenzlab_core::{Error, Result};

mod cmd_henon;
mod cmd_powers;
mod cmd_rescale;
mod cmd_scan;
mod cmd_sweep;
mod context;

use context::Ctx;

/// Experiments on 3D Henon-like maps and the return maps that converge
/// to them.
#[derive(Debug, Parser)]
#[command(name = "lorenzlab", version, about)]
struct Cli {
    /// Plain-text key-value config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Worker threads for grid computations. Default: the
    /// `LORENZLAB_THREADS` environment variable, then all cores.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Orbit, exponent spectrum, or attractor label at one parameter point.
    Henon(cmd_henon::HenonArgs),
    /// Classify a parameter grid in parallel; output bytes are
    /// thread-count independent and runs resume interrupted files.
    Sweep(cmd_sweep::SweepArgs),
    /// Deviation ladder of the rescaled return maps against their
    /// quadratic limit, or the mu2 > 0 flattening diagnostic.
    Rescale(cmd_rescale::RescaleArgs),
    /// Self-test: closed-form powers of the contracting linear block
    /// against literal matrix products.
    Powers(cmd_powers::PowersArgs),
    /// Track the candidate parameter boxes along growing passage lengths.
    ScanDelta(cmd_scan::ScanArgs),
}

/// The exit-code contract: 2 for anything wrong with the request itself,
/// 3 for computations that started but failed numerically, 4 for I/O.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonInvertible
        | Error::SaddleRegime { .. }
        | Error::DegenerateBlock
        | Error::IterateCountTooLarge { .. }
        | Error::InvalidParameter { .. }
        | Error::Degenerate { .. }
        | Error::RotationBranchRequired { .. }
        | Error::RatesDoNotStraddleOne { .. }
        | Error::GridTooLarge { .. }
        | Error::Config(_) => 2,
        Error::ImplicitSolveDiverged { .. }
        | Error::DomainEscape { .. }
        | Error::ZeroNotFound { .. }
        | Error::ScaleUnderflow { .. }
        | Error::OrbitDiverged { .. }
        | Error::SolveFailed(_)
        | Error::VerificationFailed(_) => 3,
        Error::Io(_) => 4,
    }
}

fn init_threads(flag: Option<usize>, ctx: &Ctx) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match ctx.get_usize("run", "threads")? {
            Some(n) => Some(n),
            None => match std::env::var("LORENZLAB_THREADS") {
                Ok(s) => Some(s.trim().parse().map_err(|_| {
                    Error::Config(format!("LORENZLAB_THREADS=`{s}` is not a thread count"))
                })?),
                Err(_) => None,
            },
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Config("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::load(cli.config.as_deref())?;
    init_threads(cli.threads, &ctx)?;
    match cli.command {
        Command::Henon(args) => cmd_henon::run(&ctx, args),
        Command::Sweep(args) => cmd_sweep::run(&ctx, args),
        Command::Rescale(args) => cmd_rescale::run(&ctx, args),
        Command::Powers(args) => cmd_powers::run(&ctx, args),
        Command::ScanDelta(args) => cmd_scan::run(&ctx, args),
    }
}

fn main() -> ExitCode {
    // Clap itself exits with code 2 on usage errors, matching the
    // validation bucket of the contract.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
