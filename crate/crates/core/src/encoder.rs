//! Direct fitting of a token set to an image with Adam.
//!
//! The optimizer works on unconstrained variables: `u = ln σ`, `v` with
//! `ρ = (1 - ρε)·tanh(v)`, raw means (clamped after every step) and raw
//! features on the `[0, 1]` scale. Losses are on the `[0, 1]` scale, PSNR on
//! `[0, 255]`.

use crate::error::{Error, Result};
use crate::gaussians::{clamp_geom, GaussianGeom, Token, TokenSet, RHO_EPS};
use crate::imageio::RasterImage;
use crate::optim::Adam;
use crate::quality::psnr;
use crate::renderer::{backward, render, FeatureMap};
use crate::scalar::Scalar;
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitConfig {
    pub iters: usize,
    pub lr: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    /// Iterations at the start during which only features are updated.
    pub geom_freeze_iters: usize,
    pub seed: u64,
    /// Stop early once the loss is at or below this value.
    pub tol: f64,
    /// Run render and backward on a single thread.
    pub deterministic: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iters: 500,
            lr: 2e-3,
            betas: (0.9, 0.999),
            eps: 1e-8,
            geom_freeze_iters: 50,
            seed: 0,
            tol: 1e-12,
            deterministic: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.iters == 0 {
            return bad("iters must be >= 1".into());
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr {} must be positive", self.lr));
        }
        if self.geom_freeze_iters > self.iters {
            return bad(format!(
                "geom_freeze_iters {} exceeds iters {}",
                self.geom_freeze_iters, self.iters
            ));
        }
        let (b1, b2) = self.betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return bad(format!("betas ({b1}, {b2}) must lie in [0, 1)"));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return bad(format!("eps {} must be positive", self.eps));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return bad(format!("tol {} must be non-negative", self.tol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub loss_curve: Vec<f64>,
    /// dB on the `[0, 255]` scale, computed from the clamped final render.
    pub final_psnr: f64,
    pub iterations_run: usize,
    /// Seconds.
    pub wall_time: f64,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum FitError<T: std::fmt::Debug> {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("loss became non-finite at iteration {iteration}")]
    NonFiniteLoss {
        iteration: usize,
        /// State before the failing iteration.
        last_finite: Box<TokenSet<T>>,
        report: Box<FitReport>,
    },
}

/// Mean squared error against `target / 255` and its gradient with respect
/// to `pred`.
pub fn loss_mse<T: Scalar>(pred: &FeatureMap<T>, target: &RasterImage) -> Result<(f64, FeatureMap<T>)> {
    if (pred.width, pred.height, pred.channels) != (target.width(), target.height(), target.channels() as usize) {
        return Err(Error::ShapeMismatch(format!(
            "prediction {}x{}x{} vs target {}x{}x{}",
            pred.width,
            pred.height,
            pred.channels,
            target.width(),
            target.height(),
            target.channels()
        )));
    }
    let n = pred.data.len() as f64;
    let mut grad = FeatureMap::zeros(pred.width, pred.height, pred.channels);
    let mut sum = 0.0;
    for ((g, p), t) in grad.data.iter_mut().zip(&pred.data).zip(target.data()) {
        let d = p.as_f64() - f64::from(*t) / 255.0;
        sum += d * d;
        *g = T::from_f64_lossy(2.0 * d / n);
    }
    Ok((sum / n, grad))
}

/// Renders on the `[0, 255]` scale, clamped.
pub fn render_image<T: Scalar>(ts: &TokenSet<T>, channels: usize) -> Result<RasterImage> {
    let map = render(ts, channels);
    let data = map.data.iter().map(|v| (v.as_f64() * 255.0) as f32).collect();
    RasterImage::from_unclamped(ts.width, ts.height, channels as u32, data)
}

/// Unconstrained optimizer state.
struct Params<T> {
    /// `(u_x, u_y, v, μx, μy)` per token.
    geom: Vec<T>,
    feat: Vec<T>,
    c_f: usize,
}

impl<T: Scalar> Params<T> {
    fn from_tokens(ts: &TokenSet<T>, c_f: usize) -> Self {
        let limit = 1.0 - RHO_EPS;
        let mut geom = Vec::with_capacity(ts.len() * 5);
        let mut feat = Vec::with_capacity(ts.len() * c_f);
        for t in &ts.tokens {
            let g = t.geom;
            let r = (g.rho.as_f64() / limit).clamp(-1.0 + 1e-12, 1.0 - 1e-12);
            geom.extend([
                g.sigma_x.ln(),
                g.sigma_y.ln(),
                T::from_f64_lossy(r.atanh()),
                g.mu_x,
                g.mu_y,
            ]);
            feat.extend_from_slice(&t.f);
        }
        Self { geom, feat, c_f }
    }

    /// Maps back to a valid token set and writes any clamping back into the
    /// raw variables.
    fn project(&mut self, like: &TokenSet<T>) -> Result<TokenSet<T>> {
        let limit = T::from_f64_lossy(1.0 - RHO_EPS);
        let mut tokens = Vec::with_capacity(like.len());
        for (raw, f) in self.geom.chunks_exact_mut(5).zip(self.feat.chunks_exact(self.c_f)) {
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteParameter("f"));
            }
            let g = GaussianGeom::new(raw[0].exp(), raw[1].exp(), limit * raw[2].tanh(), raw[3], raw[4]);
            let c = clamp_geom(&g, like.width, like.height, like.s)?;
            if c.sigma_x != g.sigma_x {
                raw[0] = c.sigma_x.ln();
            }
            if c.sigma_y != g.sigma_y {
                raw[1] = c.sigma_y.ln();
            }
            raw[3] = c.mu_x;
            raw[4] = c.mu_y;
            tokens.push(Token::new(c, f.to_vec()));
        }
        Ok(TokenSet {
            tokens,
            width: like.width,
            height: like.height,
            s: like.s,
        })
    }
}

/// Fits `init` to `img`. Returns the fitted set and a report.
pub fn fit<T: Scalar>(
    img: &RasterImage,
    init: &TokenSet<T>,
    cfg: &FitConfig,
) -> std::result::Result<(TokenSet<T>, FitReport), FitError<T>> {
    if cfg.deterministic {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        pool.install(|| fit_inner(img, init, cfg))
    } else {
        fit_inner(img, init, cfg)
    }
}

fn fit_inner<T: Scalar>(
    img: &RasterImage,
    init: &TokenSet<T>,
    cfg: &FitConfig,
) -> std::result::Result<(TokenSet<T>, FitReport), FitError<T>> {
    cfg.validate()?;
    init.validate()?;
    if (init.width, init.height) != (img.width(), img.height()) {
        return Err(Error::ShapeMismatch(format!(
            "tokens cover {}x{}, image is {}x{}",
            init.width,
            init.height,
            img.width(),
            img.height()
        ))
        .into());
    }
    let c = img.channels() as usize;
    let c_f = init.channels().ok_or_else(|| Error::InvalidInput("empty token set".into()))?;
    if c_f != c {
        return Err(Error::ShapeMismatch(format!("{c_f} feature channels for a {c}-channel image")).into());
    }

    let start = Instant::now();
    let t = T::from_f64_lossy;
    let betas = (t(cfg.betas.0), t(cfg.betas.1));
    let mut params = Params::from_tokens(init, c_f);
    let mut geom_opt = Adam::new(params.geom.len(), t(cfg.lr), betas, t(cfg.eps));
    let mut feat_opt = Adam::new(params.feat.len(), t(cfg.lr), betas, t(cfg.eps));
    let limit = 1.0 - RHO_EPS;

    let mut current = init.clone();
    let mut loss_curve = Vec::with_capacity(cfg.iters);
    let mut geom_grad = vec![T::zero(); params.geom.len()];
    let mut feat_grad = vec![T::zero(); params.feat.len()];

    for it in 0..cfg.iters {
        let pred = render(&current, c);
        let (loss, upstream) = loss_mse(&pred, img)?;
        if !loss.is_finite() {
            return Err(non_finite(it, current, loss_curve, img, c, start, cfg));
        }
        loss_curve.push(loss);
        if loss <= cfg.tol {
            break;
        }
        let grads = backward(&current, &upstream);
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(non_finite(it, current, loss_curve, img, c, start, cfg));
        }
        for (i, (g, tok)) in grads.iter().zip(&current.tokens).enumerate() {
            feat_grad[i * c_f..(i + 1) * c_f].copy_from_slice(&g.d_f);
            let rho = tok.geom.rho.as_f64();
            let dtanh = limit * (1.0 - (rho / limit).powi(2));
            let gg = &mut geom_grad[i * 5..i * 5 + 5];
            gg[0] = g.d_sigma_x * tok.geom.sigma_x;
            gg[1] = g.d_sigma_y * tok.geom.sigma_y;
            gg[2] = g.d_rho * t(dtanh);
            gg[3] = g.d_mu_x;
            gg[4] = g.d_mu_y;
        }
        feat_opt.step(&mut params.feat, &feat_grad);
        if it >= cfg.geom_freeze_iters {
            geom_opt.step(&mut params.geom, &geom_grad);
        }
        match params.project(init) {
            Ok(next) => current = next,
            Err(_) => return Err(non_finite(it + 1, current, loss_curve, img, c, start, cfg)),
        }
    }

    let final_psnr = psnr(img, &render_image(&current, c)?)?;
    let report = FitReport {
        iterations_run: loss_curve.len(),
        loss_curve,
        final_psnr,
        wall_time: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
    };
    Ok((current, report))
}

fn non_finite<T: Scalar>(
    iteration: usize,
    last: TokenSet<T>,
    loss_curve: Vec<f64>,
    img: &RasterImage,
    c: usize,
    start: Instant,
    cfg: &FitConfig,
) -> FitError<T> {
    let final_psnr = render_image(&last, c)
        .and_then(|r| psnr(img, &r))
        .unwrap_or(f64::NAN);
    FitError::NonFiniteLoss {
        iteration,
        report: Box::new(FitReport {
            iterations_run: loss_curve.len(),
            loss_curve,
            final_psnr,
            wall_time: start.elapsed().as_secs_f64(),
            seed: cfg.seed,
        }),
        last_finite: Box::new(last),
    }
}
