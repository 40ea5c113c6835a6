use adasplat_core::calibration::{self, CalibConfig};
use adasplat_core::complexity::ComplexityConfig;
use adasplat_core::encoder::{self, render_image, FitConfig, FitError};
use adasplat_core::gaussians::{init_from_image, DEFAULT_SUPPORT};
use adasplat_core::imageio::{load_image, load_importance, save_image};
use adasplat_core::partition::{partition_image, PartitionConfig, DEFAULT_S_MIN};
use adasplat_core::renderer::{gaussian_density_map, gradcheck::gradcheck as run_gradcheck};
use adasplat_core::tokenstore::{read_tokens, write_tokens};
use adasplat_core::{quality, GaussianGeom, RasterImage, TokenSetF32};
use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Args)]
pub struct PartitionArgs {
    #[arg(long)]
    image: PathBuf,
    /// Number of regions
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    tokens: u32,
    #[arg(long, default_value_t = 2.5)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_S_MIN, value_parser = clap::value_parser!(u32).range(1..))]
    smin: u32,
    /// Grayscale image scaling each region's complexity by its mean value
    #[arg(long)]
    importance: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct EncodeArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    tokens: u32,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u32).range(1..))]
    iters: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2e-3)]
    lr: f64,
    /// Iterations at the start that update features only
    #[arg(long, default_value_t = 50)]
    freeze: u32,
    #[arg(long, default_value_t = 2.5)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_S_MIN, value_parser = clap::value_parser!(u32).range(1..))]
    smin: u32,
    #[arg(long)]
    importance: Option<PathBuf>,
    /// Single-threaded, bit-stable fitting
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
pub struct DecodeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct CalibrateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_S_MIN, value_parser = clap::value_parser!(u32).range(1..))]
    smin: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(1..))]
    probes: u32,
}

#[derive(Args)]
pub struct MetricsArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Write JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct RenderMapArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// JSON number, or a string for values JSON cannot hold.
fn real(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn geom_json(g: &GaussianGeom<f32>) -> Value {
    json!({
        "sigma_x": g.sigma_x,
        "sigma_y": g.sigma_y,
        "rho": g.rho,
        "mu_x": g.mu_x,
        "mu_y": g.mu_y,
    })
}

fn partition_config(tokens: u32, lambda: f64, smin: u32) -> PartitionConfig {
    PartitionConfig {
        l: tokens as usize,
        s_min: smin,
        complexity: ComplexityConfig::with_lambda(lambda),
    }
}

fn load_pair(image: &Path, importance: Option<&Path>) -> Result<(RasterImage, Option<adasplat_core::GradientMap>)> {
    let img = load_image(image).with_context(|| format!("loading {}", image.display()))?;
    let imp = importance
        .map(|p| load_importance(p).with_context(|| format!("loading {}", p.display())))
        .transpose()?;
    Ok((img, imp))
}

pub fn partition(args: PartitionArgs) -> Result<()> {
    let (img, imp) = load_pair(&args.image, args.importance.as_deref())?;
    let cfg = partition_config(args.tokens, args.lambda, args.smin);
    let res = partition_image(&img, &cfg, imp.as_ref())?;
    let geoms: Vec<Value> = res
        .regions
        .iter()
        .map(|r| geom_json(&GaussianGeom::from_region(r)))
        .collect();
    write_json(
        &args.out,
        &json!({
            "width": img.width(),
            "height": img.height(),
            "tokens": args.tokens,
            "lambda": args.lambda,
            "s_min": args.smin,
            "regions": res.regions,
            "trace": res.trace,
            "gaussians": geoms,
        }),
    )
}

pub fn encode(args: EncodeArgs) -> Result<()> {
    let (img, imp) = load_pair(&args.image, args.importance.as_deref())?;
    let part = partition_image(&img, &partition_config(args.tokens, args.lambda, args.smin), imp.as_ref())?;
    let init: TokenSetF32 = init_from_image(&part.regions, &img, DEFAULT_SUPPORT as f32)?;
    let cfg = FitConfig {
        iters: args.iters as usize,
        lr: args.lr,
        geom_freeze_iters: args.freeze as usize,
        seed: args.seed,
        deterministic: args.deterministic,
        ..FitConfig::default()
    };
    let (tokens, report) = match encoder::fit(&img, &init, &cfg) {
        Ok(done) => done,
        Err(FitError::NonFiniteLoss {
            iteration, last_finite, ..
        }) => {
            write_tokens(&*last_finite, &args.out)?;
            bail!(
                "loss became non-finite at iteration {iteration}; last finite tokens written to {}",
                args.out.display()
            );
        }
        Err(FitError::Invalid(e)) => return Err(e.into()),
    };
    write_tokens(&tokens, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let summary = json!({
        "loss_curve": report.loss_curve,
        "final_psnr": real(report.final_psnr),
        "iterations_run": report.iterations_run,
        "wall_time": report.wall_time,
        "seed": report.seed,
        "tokens": tokens.len(),
        "width": tokens.width,
        "height": tokens.height,
    });
    match &args.report {
        Some(path) => write_json(path, &summary)?,
        None => println!(
            "{} tokens, {} iterations, PSNR {:.3} dB",
            tokens.len(),
            report.iterations_run,
            report.final_psnr
        ),
    }
    Ok(())
}

fn read(path: &Path) -> Result<TokenSetF32> {
    read_tokens(path).with_context(|| format!("reading {}", path.display()))
}

pub fn decode(args: DecodeArgs) -> Result<()> {
    let ts = read(&args.input)?;
    let c = ts.channels().unwrap_or(1);
    if c != 1 && c != 3 {
        bail!("{c} feature channels cannot be saved as an image (need 1 or 3)");
    }
    let img = render_image(&ts, c)?;
    save_image(&img, &args.out).with_context(|| format!("writing {}", args.out.display()))
}

pub fn calibrate(args: CalibrateArgs) -> Result<()> {
    let ts = read(&args.input)?;
    let cfg = CalibConfig::new(args.smin, ts.width, ts.height)?;
    let cal = calibration::calibrate(&ts.geoms(), &cfg)?;
    write_json(
        &args.out,
        &json!({
            "width": ts.width,
            "height": ts.height,
            "s_min": args.smin,
            "gaussians": cal.geoms.iter().map(geom_json).collect::<Vec<_>>(),
            "regions": cal.regions,
            "assignment": cal.assignment,
            "snapped": cal.snapped,
        }),
    )
}

pub fn gradcheck(args: GradcheckArgs) -> Result<()> {
    let report = run_gradcheck(args.seed, args.probes as usize);
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "seed": args.seed,
            "probes": report.probes,
            "failures": report.failures,
            "max_rel_error": report.max_rel_error,
            "max_small_abs_error": report.max_small_abs_error,
            "worst": report.worst,
        }))?
    );
    if !report.passed() {
        bail!("{} of {} probes exceeded the tolerance", report.failures, report.probes);
    }
    Ok(())
}

pub fn metrics(args: MetricsArgs) -> Result<()> {
    let a = load_image(&args.reference).with_context(|| format!("loading {}", args.reference.display()))?;
    let b = load_image(&args.test).with_context(|| format!("loading {}", args.test.display()))?;
    let m = quality::metrics(&a, &b)?;
    let v = json!({ "psnr": real(m.psnr), "ssim": m.ssim });
    match &args.out {
        Some(path) => write_json(path, &v),
        None => {
            println!("{}", serde_json::to_string_pretty(&v)?);
            Ok(())
        }
    }
}

pub fn render_map(args: RenderMapArgs) -> Result<()> {
    let ts = read(&args.input)?;
    let map = gaussian_density_map(&ts);
    let peak = map.data.iter().fold(0.0f32, |m, &v| m.max(v));
    let scale = if peak > 0.0 { 255.0 / peak } else { 0.0 };
    let data = map.data.iter().map(|v| v * scale).collect();
    let img = RasterImage::from_unclamped(ts.width, ts.height, 1, data)?;
    save_image(&img, &args.out).with_context(|| format!("writing {}", args.out.display()))
}
