//! `hapke-elmm` command-line tool.
//!
//! Exit codes: 0 on success, 1 for invalid input or failed validation,
//! 2 when a reflectance model is evaluated outside its domain.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cmd;
mod manifest;
mod recipe;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hapke_elmm::solver::{Initialization, SolverModel};
use hapke_elmm::ReflectanceModel;

#[derive(Debug, Parser)]
#[command(
    name = "hapke-elmm",
    version,
    about = "Hapke reflectance, ELMM scene simulation and unmixing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a reflectance model for every band of an albedo file.
    Forward(ForwardArgs),
    /// Simulate a synthetic hyperspectral cube.
    Simulate(SimulateArgs),
    /// Estimate abundances (and scaling factors) of a cube.
    Unmix(UnmixArgs),
    /// Compare a reflectance model with its linear approximation over an angle grid.
    Sweep(SweepArgs),
    /// Check a saved cube for consistency.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
struct GeometryArgs {
    /// Reflectance model: full, lambertian, relative or linear.
    #[arg(long)]
    model: Option<ReflectanceModel>,
    /// Incidence angle in degrees.
    #[arg(long)]
    theta0: Option<f64>,
    /// Emergence angle in degrees.
    #[arg(long)]
    theta: Option<f64>,
    /// Azimuth between incidence and emergence planes, in degrees.
    #[arg(long)]
    phi: Option<f64>,
}

#[derive(Debug, Args)]
struct ForwardArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Albedo CSV (`wavelength,<material>...`).
    #[arg(long)]
    albedo: Option<PathBuf>,
    /// Photometric parameters JSON; Lambertian photometry if omitted.
    #[arg(long)]
    photometry: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long)]
    albedo: Option<PathBuf>,
    #[arg(long)]
    photometry: Option<PathBuf>,
    #[arg(long)]
    pixels: Option<usize>,
    #[arg(long)]
    snr_db: Option<f64>,
}

#[derive(Debug, Args)]
struct UnmixArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Cube sidecar JSON written by `simulate`.
    #[arg(long)]
    cube: Option<PathBuf>,
    /// Endmember CSV; defaults to the one referenced by the cube.
    #[arg(long)]
    endmembers: Option<PathBuf>,
    /// Solver: lmm (alias fcls), elmm-global or elmm-full.
    #[arg(long)]
    solver: Option<SolverModel>,
    #[arg(long)]
    psi_min: Option<f64>,
    #[arg(long)]
    psi_max: Option<f64>,
    #[arg(long, value_parser = parse_init)]
    init: Option<Initialization>,
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Reference model compared with the linear model (default relative).
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long)]
    albedo: Option<PathBuf>,
    #[arg(long)]
    photometry: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Cube sidecar JSON.
    #[arg(long)]
    cube: Option<PathBuf>,
    /// Endmember CSV for the conservation check; defaults to the cube's.
    #[arg(long)]
    endmembers: Option<PathBuf>,
    /// Optional output directory for `report.json` and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_init(s: &str) -> Result<Initialization, String> {
    match s {
        "lmm" => Ok(Initialization::Lmm),
        "global-scaling" => Ok(Initialization::GlobalScaling),
        other => Err(format!(
            "unknown initialization '{other}' (expected lmm or global-scaling)"
        )),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<hapke_elmm::Error>() {
        Some(e) if e.is_domain() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Forward(args) => cmd::forward::run(args),
        Command::Simulate(args) => cmd::simulate::run(args),
        Command::Unmix(args) => cmd::unmix::run(args),
        Command::Sweep(args) => cmd::sweep::run(args),
        Command::Verify(args) => cmd::verify::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
