//! `cassi` — simulate dual-camera CASSI acquisition, reconstruct spectral
//! cubes with TV-subgradient-guided fusion, and score the results.

mod commands;
mod config;
mod error;
mod format;
mod manifest;

use clap::{Args, Parser, Subcommand};
use config::AdmmOverrides;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cassi",
    version,
    about = "Dual-camera CASSI simulation, reconstruction, and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the SD-CASSI measurement (and optionally the RGB branch) of a scene
    Simulate(SimulateCmd),
    /// Reconstruct a spectral cube from a measurement
    Reconstruct(ReconstructCmd),
    /// Score a reconstruction against the ground truth
    Evaluate(EvaluateCmd),
    /// Generate a synthetic scene cube
    Genscene(GensceneCmd),
    /// Generate a binary coded-aperture mask
    Genmask(GenmaskCmd),
    /// Convert between the HSC1 container and NPY
    Convert(ConvertCmd),
}

#[derive(Args)]
struct SimulateCmd {
    /// Scene cube (.hsc)
    #[arg(long)]
    scene: PathBuf,
    /// Transmittance mask cube (.hsc)
    #[arg(long)]
    mask: PathBuf,
    /// Spectral response CSV (C rows x L columns); enables the RGB branch
    #[arg(long)]
    response: Option<PathBuf>,
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shear step s (default 1)
    #[arg(long)]
    shear: Option<usize>,
    /// Detector noise sigma
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// RGB branch noise sigma
    #[arg(long)]
    rgb_noise_sigma: Option<f64>,
    /// Bayer layout: rggb, bggr, grbg, gbrg
    #[arg(long)]
    bayer: Option<String>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReconstructCmd {
    /// Measurement plane (.hsc)
    #[arg(long)]
    measurement: PathBuf,
    /// Transmittance mask cube (.hsc)
    #[arg(long)]
    mask: PathBuf,
    /// RGB/panchromatic image (.hsc); required for tvds and tvds-star
    #[arg(long)]
    rgb: Option<PathBuf>,
    /// Spectral response CSV; required for tvds-star
    #[arg(long)]
    response: Option<PathBuf>,
    /// Reconstruction mode: tv-only, tvds, tvds-star (default tvds)
    #[arg(long)]
    mode: Option<String>,
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shear step s (derived from geometry when omitted)
    #[arg(long)]
    shear: Option<usize>,
    /// Update order: as-printed or conventional
    #[arg(long)]
    order: Option<String>,
    /// Reference lift: interpolate or response-pinv
    #[arg(long)]
    lift: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Fixed-point sweeps per regularization step (K)
    #[arg(long)]
    inner_iters: Option<usize>,
    /// ADMM iterations per stage (N)
    #[arg(long)]
    iters_per_stage: Option<usize>,
    #[arg(long)]
    num_stages: Option<usize>,
    /// Reference refresh period, in stages
    #[arg(long)]
    ref_update_interval: Option<usize>,
    #[arg(long)]
    cg_tol: Option<f64>,
    #[arg(long)]
    cg_max_iters: Option<usize>,
    /// Exit with code 3 when an inner CG solve fails to converge
    #[arg(long)]
    strict: bool,
    /// Output directory
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateCmd {
    /// Reconstruction cube (.hsc)
    #[arg(long)]
    recon: PathBuf,
    /// Ground-truth cube (.hsc)
    #[arg(long)]
    truth: PathBuf,
    /// Peak convention: ref-max or one
    #[arg(long)]
    peak: Option<String>,
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Evaluate even when the lineage hashes disagree
    #[arg(long)]
    force: bool,
    /// Output directory
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GensceneCmd {
    /// Scene family: piecewise, gaussian-blobs, ramp
    #[arg(long)]
    kind: String,
    #[arg(long)]
    height: usize,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    bands: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output cube path (.hsc)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenmaskCmd {
    #[arg(long)]
    height: usize,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    bands: usize,
    /// Bernoulli transmittance density in (0, 1]
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output cube path (.hsc)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConvertCmd {
    /// Input file (.hsc or .npy)
    #[arg(long)]
    input: PathBuf,
    /// Output file (.hsc or .npy); direction follows the extensions
    #[arg(long)]
    output: PathBuf,
    /// Downcast the payload to f32
    #[arg(long = "f32")]
    to_f32: bool,
}

fn run(cli: Cli) -> error::Result<()> {
    match cli.command {
        Command::Simulate(cmd) => commands::simulate(commands::SimulateArgs {
            scene: cmd.scene,
            mask: cmd.mask,
            response: cmd.response,
            config: cmd.config,
            shear: cmd.shear,
            noise_sigma: cmd.noise_sigma,
            rgb_noise_sigma: cmd.rgb_noise_sigma,
            bayer: cmd.bayer,
            seed: cmd.seed,
            out_dir: cmd.out_dir,
        }),
        Command::Reconstruct(cmd) => commands::reconstruct(commands::ReconstructArgs {
            measurement: cmd.measurement,
            mask: cmd.mask,
            rgb: cmd.rgb,
            response: cmd.response,
            mode: cmd.mode,
            config: cmd.config,
            shear: cmd.shear,
            order: cmd.order,
            lift: cmd.lift,
            overrides: AdmmOverrides {
                rho: cmd.rho,
                mu: cmd.mu,
                tau: cmd.tau,
                inner_iters: cmd.inner_iters,
                iters_per_stage: cmd.iters_per_stage,
                num_stages: cmd.num_stages,
                ref_update_interval: cmd.ref_update_interval,
            },
            cg_tol: cmd.cg_tol,
            cg_max_iters: cmd.cg_max_iters,
            strict: cmd.strict,
            out_dir: cmd.out_dir,
        }),
        Command::Evaluate(cmd) => commands::evaluate(commands::EvaluateArgs {
            recon: cmd.recon,
            truth: cmd.truth,
            peak: cmd.peak,
            config: cmd.config,
            force: cmd.force,
            out_dir: cmd.out_dir,
        }),
        Command::Genscene(cmd) => commands::genscene(commands::GenSceneArgs {
            kind: cmd.kind,
            height: cmd.height,
            width: cmd.width,
            bands: cmd.bands,
            seed: cmd.seed,
            out: cmd.out,
        }),
        Command::Genmask(cmd) => commands::genmask(commands::GenMaskArgs {
            height: cmd.height,
            width: cmd.width,
            bands: cmd.bands,
            density: cmd.density,
            seed: cmd.seed,
            out: cmd.out,
        }),
        Command::Convert(cmd) => commands::convert(commands::ConvertArgs {
            input: cmd.input,
            output: cmd.output,
            to_f32: cmd.to_f32,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
