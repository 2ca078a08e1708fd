mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Panoramic scene geometry pipeline.
#[derive(Debug, Parser)]
#[command(name = "panoscene", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rasterize a layout into coarse depth, coarse weight and semantic maps.
    ConvertLayout(ConvertLayoutArgs),
    /// Fuse coarse depth with per-view estimates in closed form.
    Integrate(IntegrateArgs),
    /// Score a depth map against ground truth after affine alignment.
    Evaluate(EvaluateArgs),
    /// Write a point cloud and optionally a translated perspective render.
    Export(ExportArgs),
    /// Evaluate a Gaussian-mixture terrain heightfield.
    SynthTerrain(SynthTerrainArgs),
    /// Extract the 16 tangent views from a panorama (PNG or PFM).
    TangentViews(TangentViewsArgs),
    /// Re-project tangent-view depth estimates onto the panorama with weights.
    ViewsToErp(ViewsToErpArgs),
}

#[derive(Debug, Args)]
pub struct ConvertLayoutArgs {
    #[arg(long)]
    pub layout: PathBuf,
    /// Panorama size as HxW, e.g. 512x1024.
    #[arg(long, default_value = "512x1024")]
    pub erp: String,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// JSON file overriding integration constants.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[arg(long)]
    pub coarse: PathBuf,
    #[arg(long)]
    pub coarse_weight: PathBuf,
    /// Directory of view_<k>.pfm / weight_<k>.pfm pairs.
    #[arg(long)]
    pub views: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the diagonal loading (0 disables it).
    #[arg(long)]
    pub ridge: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub est: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub rgb: PathBuf,
    #[arg(long)]
    pub depth: PathBuf,
    #[arg(long)]
    pub ply: PathBuf,
    /// Camera JSON for a perspective render.
    #[arg(long)]
    pub render: Option<PathBuf>,
    /// Camera translation x,y,z in meters.
    #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
    pub translate: String,
}

#[derive(Debug, Args)]
pub struct SynthTerrainArgs {
    #[arg(long)]
    pub gmm: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TangentViewsArgs {
    #[arg(long)]
    pub erp: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Tangent image side length.
    #[arg(long, default_value_t = 512)]
    pub size: usize,
}

#[derive(Debug, Args)]
pub struct ViewsToErpArgs {
    /// Directory of view_<k>.pfm tangent depth maps (k = 1..16).
    #[arg(long)]
    pub tangent_dir: PathBuf,
    #[arg(long, default_value = "512x1024")]
    pub erp: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn configure_threads() {
    if let Some(n) = std::env::var("PANOSCENE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::ConvertLayout(a) => commands::convert_layout(&a),
        Command::Integrate(a) => commands::integrate(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Export(a) => commands::export(&a),
        Command::SynthTerrain(a) => commands::synth_terrain(&a),
        Command::TangentViews(a) => commands::tangent_views(&a),
        Command::ViewsToErp(a) => commands::views_to_erp(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
