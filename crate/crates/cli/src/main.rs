//! `lsdf`: render two-layer SDF scenes, extract meshes, evaluate metrics,
//! check frustum moments and fit density profiles.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "lsdf",
    version,
    about = "Two-layer SDF renderer and geometry tools"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render one camera of a scene to PPM or PFM.
    Render(RenderArgs),
    /// Triangulate the zero level set of one layer.
    ExtractMesh(MeshArgs),
    /// Compute an evaluation metric.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Compare printed, derived and Monte-Carlo frustum moments.
    McCheck(McCheckArgs),
    /// Fit a Gaussian mixture to a CSV of (s, sigma) pairs.
    FitDensity(FitArgs),
}

#[derive(Args, Debug)]
struct RenderArgs {
    scene: PathBuf,
    #[arg(long, default_value_t = 0)]
    camera: usize,
    /// Output image; the extension selects the format (.ppm or .pfm).
    #[arg(long)]
    out: PathBuf,
    /// Per-pixel case map as PPM (black, red, green, blue for cases 1-4).
    #[arg(long)]
    case_map: Option<PathBuf>,
    #[arg(long)]
    no_integrated_sdf: bool,
    /// Per-pixel trace diagnostics as CSV.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Layer {
    Hard,
    Soft,
}

#[derive(Args, Debug)]
struct MeshArgs {
    scene: PathBuf,
    #[arg(long, value_enum)]
    layer: Layer,
    #[arg(long, default_value_t = 64)]
    res: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    iso: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum EvalCommand {
    /// PSNR between two PFM images.
    Psnr {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        peak: f64,
    },
    /// Single-direction Chamfer distance from reference to candidate vertices.
    Chamfer {
        reference: PathBuf,
        candidate: PathBuf,
        /// Per-axis L1 point distance instead of Euclidean.
        #[arg(long)]
        manhattan: bool,
    },
    /// Eikonal residual of one layer at uniform points in the scene bounds.
    Eikonal {
        scene: PathBuf,
        #[arg(long, value_enum)]
        layer: Layer,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        grad_eps: f64,
    },
}

fn parse_count(s: &str) -> Result<usize, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if !(v >= 0.0 && v.fract() == 0.0 && v <= 1e15) {
        return Err(format!("not a non-negative integer: {s}"));
    }
    Ok(v as usize)
}

#[derive(Args, Debug)]
struct McCheckArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Samples per trial; accepts scientific notation such as 1e6.
    #[arg(long, default_value = "1e6", value_parser = parse_count)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// Agreement threshold in standard errors.
    #[arg(long, default_value_t = 4.0)]
    sigmas: f64,
}

#[derive(Args, Debug)]
struct FitArgs {
    profile: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long)]
    seed: u64,
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("{}", error_line("UsageError", first));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            let (kind, msg) = match e.downcast_ref::<layered_sdf::Error>() {
                Some(err) => (err.kind().to_string(), err.to_string()),
                None => ("Error".to_string(), format!("{e:#}")),
            };
            eprintln!("{}", error_line(&kind, &msg.replace('\n', " ")));
            ExitCode::FAILURE
        }
    }
}
