mod commands;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "adasplat", version, about = "Spatially-adaptive Gaussian image tokens")]
struct Cli {
    /// Cap on worker threads (defaults to all cores)
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split an image into complexity-balanced regions
    Partition(commands::PartitionArgs),
    /// Initialize tokens from a partition and fit them to the image
    Encode(commands::EncodeArgs),
    /// Render a token file back to an image
    Decode(commands::DecodeArgs),
    /// Snap token means to a grid and re-derive their layout
    Calibrate(commands::CalibrateArgs),
    /// Check analytic renderer gradients against finite differences
    Gradcheck(commands::GradcheckArgs),
    /// PSNR and SSIM between two images
    Metrics(commands::MetricsArgs),
    /// Render the Gaussian density of a token file as a grayscale image
    RenderMap(commands::RenderMapArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Partition(args) => commands::partition(args),
        Command::Encode(args) => commands::encode(args),
        Command::Decode(args) => commands::decode(args),
        Command::Calibrate(args) => commands::calibrate(args),
        Command::Gradcheck(args) => commands::gradcheck(args),
        Command::Metrics(args) => commands::metrics(args),
        Command::RenderMap(args) => commands::render_map(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
