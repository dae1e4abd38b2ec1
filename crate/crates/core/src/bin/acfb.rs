use std::path::PathBuf;
use std::process::ExitCode;

use acfb::cli::{run, RunOptions, Subcommand};
use acfb::Exec;
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Minimize,
    Analyze,
    Weiss,
    Growth,
    Census,
    Connect1d,
    Sweep,
}

/// Solver and free-boundary analysis for vector Allen-Cahn energies.
#[derive(Parser)]
#[command(name = "acfb", version)]
struct Args {
    subcommand: Cmd,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Exit with status 4 when an acceptance gate fails.
    #[arg(long)]
    check: bool,
    /// Output directory (overrides ACFB_OUT_DIR and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run all kernels on one thread.
    #[arg(long)]
    sequential: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let subcommand = match args.subcommand {
        Cmd::Minimize => Subcommand::Minimize,
        Cmd::Analyze => Subcommand::Analyze,
        Cmd::Weiss => Subcommand::Weiss,
        Cmd::Growth => Subcommand::Growth,
        Cmd::Census => Subcommand::Census,
        Cmd::Connect1d => Subcommand::Connect1d,
        Cmd::Sweep => Subcommand::Sweep,
    };
    let opts = RunOptions {
        subcommand,
        config: args.config,
        check: args.check,
        out: args.out,
        exec: if args.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        },
    };
    ExitCode::from(run(&opts) as u8)
}
