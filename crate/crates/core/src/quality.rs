//! PSNR and single-scale SSIM on the `[0, 255]` scale.
//!
//! SSIM uses an 11x11 Gaussian window (σ = 1.5), K1 = 0.01, K2 = 0.03,
//! L = 255, averaged over valid window positions and then over channels.

use crate::error::{Error, Result};
use crate::imageio::RasterImage;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
const PEAK: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// dB; `f64::INFINITY` for identical images.
    pub psnr: f64,
    pub ssim: f64,
}

fn check_shapes(a: &RasterImage, b: &RasterImage) -> Result<()> {
    if (a.width(), a.height(), a.channels()) != (b.width(), b.height(), b.channels()) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    Ok(())
}

pub fn mse(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Converts an MSE on the `[0, 255]` scale into dB.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn psnr(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

/// Separable valid-mode filter of a `w × h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w + 1 - SSIM_WINDOW, h + 1 - SSIM_WINDOW);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|i| win[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| win[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

pub fn ssim(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    check_shapes(a, b)?;
    let (w, h, c) = (a.width() as usize, a.height() as usize, a.channels() as usize);
    if w.min(h) < SSIM_WINDOW {
        return Err(Error::ImageTooSmall(format!(
            "SSIM needs both sides >= {SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let win = gaussian_window();
    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let mut total = 0.0;
    for k in 0..c {
        let pa: Vec<f64> = a.data().iter().skip(k).step_by(c).map(|&v| f64::from(v)).collect();
        let pb: Vec<f64> = b.data().iter().skip(k).step_by(c).map(|&v| f64::from(v)).collect();
        let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).collect::<Vec<_>>();
        let mu_a = filter_valid(&pa, w, h, &win);
        let mu_b = filter_valid(&pb, w, h, &win);
        let e_aa = filter_valid(&prod(&pa, &pa), w, h, &win);
        let e_bb = filter_valid(&prod(&pb, &pb), w, h, &win);
        let e_ab = filter_valid(&prod(&pa, &pb), w, h, &win);
        let n = mu_a.len();
        let mut sum = 0.0;
        for i in 0..n {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_aa[i] - ma * ma;
            let var_b = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
            sum += num / den;
        }
        total += sum / n as f64;
    }
    Ok((total / c as f64).clamp(-1.0, 1.0))
}

pub fn metrics(reference: &RasterImage, test: &RasterImage) -> Result<MetricReport> {
    Ok(MetricReport {
        psnr: psnr(reference, test)?,
        ssim: ssim(reference, test)?,
    })
}
