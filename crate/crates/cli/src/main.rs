//! `parmor`: reduce, evaluate and analyse parametric interconnect models.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Options shared by every subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// Output file; stdout when omitted (the manifest then goes to stderr).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON file with the same keys as the long flags; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(
    name = "parmor",
    version,
    about = "Parametric model order reduction for RC/RLC interconnect"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Write a synthetic benchmark netlist.
    Gen(commands::GenArgs),
    /// Reduce a netlist into a parametric reduced model.
    Reduce(commands::ReduceArgs),
    /// Frequency response of the full system or of one model.
    Eval(commands::EvalArgs),
    /// Dominant poles of the full system and optionally of a model.
    Poles(commands::PolesArgs),
    /// Multi-parameter moments, optionally checking a low-rank model.
    Moments(commands::MomentsArgs),
    /// Monte Carlo study of dominant-pole errors.
    Mc(commands::McArgs),
    /// Overlay several models against the full system.
    Compare(commands::CompareArgs),
}

fn configure_threads() {
    if let Some(n) = std::env::var("PARMOR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() {
    let cli = Cli::parse();
    configure_threads();
    let c = &cli.common;
    let result = match &cli.cmd {
        Cmd::Gen(a) => commands::gen(a, c),
        Cmd::Reduce(a) => commands::reduce(a, c),
        Cmd::Eval(a) => commands::eval(a, c),
        Cmd::Poles(a) => commands::poles(a, c),
        Cmd::Moments(a) => commands::moments(a, c),
        Cmd::Mc(a) => commands::mc(a, c),
        Cmd::Compare(a) => commands::compare(a, c),
    };
    if let Err(e) = result {
        eprintln!("parmor: {e}");
        std::process::exit(e.exit_code());
    }
}
