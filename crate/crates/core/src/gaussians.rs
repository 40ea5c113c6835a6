//! Gaussian tokens: 5 geometry parameters plus a feature vector.
//!
//! The Gaussian is unnormalized (peak 1 at the mean) and truncated to the
//! box `|x - μx| <= s·σx, |y - μy| <= s·σy`. Pixel `(i, j)` is sampled at its
//! center `(i + 0.5, j + 0.5)` in the continuous frame `[0, W] × [0, H]`.

use crate::complexity::Region;
use crate::error::{Error, Result};
use crate::imageio::RasterImage;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Lower bound on both standard deviations.
pub const SIGMA_EPS: f64 = 1e-4;
/// `|ρ| <= 1 - RHO_EPS`.
pub const RHO_EPS: f64 = 1e-4;
/// Default support factor `s`.
pub const DEFAULT_SUPPORT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianGeom<T> {
    pub sigma_x: T,
    pub sigma_y: T,
    pub rho: T,
    pub mu_x: T,
    pub mu_y: T,
}

impl<T: Scalar> GaussianGeom<T> {
    pub fn new(sigma_x: T, sigma_y: T, rho: T, mu_x: T, mu_y: T) -> Self {
        Self {
            sigma_x,
            sigma_y,
            rho,
            mu_x,
            mu_y,
        }
    }

    /// Region initialization `{w/6, h/6, 0, center}`, σ floored at [`SIGMA_EPS`].
    pub fn from_region(r: &Region) -> Self {
        let (cx, cy) = r.center();
        let floor = |v: f64| T::from_f64_lossy(v.max(SIGMA_EPS));
        Self {
            sigma_x: floor(f64::from(r.width()) / 6.0),
            sigma_y: floor(f64::from(r.height()) / 6.0),
            rho: T::zero(),
            mu_x: T::from_f64_lossy(cx),
            mu_y: T::from_f64_lossy(cy),
        }
    }

    pub fn as_array(&self) -> [T; 5] {
        [self.sigma_x, self.sigma_y, self.rho, self.mu_x, self.mu_y]
    }

    pub fn from_array(a: [T; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn cast<U: Scalar>(&self) -> GaussianGeom<U> {
        GaussianGeom::from_array(self.as_array().map(|v| U::from_f64_lossy(v.as_f64())))
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    /// Checks the σ and ρ bounds and that the mean lies in the extended frame
    /// of a `width × height` image.
    pub fn validate(&self, width: u32, height: u32, s: T) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::InvariantViolation("non-finite Gaussian parameter".into()));
        }
        let sigma_eps = T::from_f64_lossy(SIGMA_EPS);
        if self.sigma_x < sigma_eps || self.sigma_y < sigma_eps {
            return Err(Error::InvariantViolation(format!(
                "sigma ({}, {}) below {SIGMA_EPS}",
                self.sigma_x, self.sigma_y
            )));
        }
        if self.rho.abs() > rho_limit::<T>() {
            return Err(Error::InvariantViolation(format!("rho {} outside (-1, 1)", self.rho)));
        }
        let (lo_x, hi_x, lo_y, hi_y) = mean_frame::<T>(width, height, s);
        if self.mu_x < lo_x || self.mu_x > hi_x || self.mu_y < lo_y || self.mu_y > hi_y {
            return Err(Error::InvariantViolation(format!(
                "mean ({}, {}) outside the extended frame",
                self.mu_x, self.mu_y
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn rho_limit<T: Scalar>() -> T {
    T::one() - T::from_f64_lossy(RHO_EPS)
}

fn sigma_max<T: Scalar>(width: u32, height: u32) -> T {
    T::from_f64_lossy(f64::from(width.max(height)))
}

/// `(lo_x, hi_x, lo_y, hi_y)` bounds for the mean: `[-s·σmax, W + s·σmax]`.
fn mean_frame<T: Scalar>(width: u32, height: u32, s: T) -> (T, T, T, T) {
    let pad = s * sigma_max::<T>(width, height);
    let w = T::from_f64_lossy(f64::from(width));
    let h = T::from_f64_lossy(f64::from(height));
    (-pad, w + pad, -pad, h + pad)
}

/// Projects unconstrained parameters onto the valid set of a `width × height` image.
pub fn clamp_geom<T: Scalar>(g: &GaussianGeom<T>, width: u32, height: u32, s: T) -> Result<GaussianGeom<T>> {
    let names = ["sigma_x", "sigma_y", "rho", "mu_x", "mu_y"];
    if let Some(i) = g.as_array().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteParameter(names[i]));
    }
    let sigma_eps = T::from_f64_lossy(SIGMA_EPS);
    let smax = sigma_max::<T>(width, height);
    let rl = rho_limit::<T>();
    let (lo_x, hi_x, lo_y, hi_y) = mean_frame(width, height, s);
    Ok(GaussianGeom {
        sigma_x: g.sigma_x.max(sigma_eps).min(smax),
        sigma_y: g.sigma_y.max(sigma_eps).min(smax),
        rho: g.rho.max(-rl).min(rl),
        mu_x: g.mu_x.max(lo_x).min(hi_x),
        mu_y: g.mu_y.max(lo_y).min(hi_y),
    })
}

/// A Gaussian with its derived quantities precomputed in `f64`.
///
/// Every render path and [`eval_gaussian`] go through [`Prepared::weight`],
/// so identical inputs yield bit-identical weights everywhere.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Prepared {
    pub mu_x: f64,
    pub mu_y: f64,
    pub rho: f64,
    pub inv_sx: f64,
    pub inv_sy: f64,
    /// `1 / (1 - ρ²)`
    pub inv_d: f64,
    pub half_w: f64,
    pub half_h: f64,
}

impl Prepared {
    pub fn new<T: Scalar>(g: &GaussianGeom<T>, s: f64) -> Self {
        let (sx, sy, rho) = (g.sigma_x.as_f64(), g.sigma_y.as_f64(), g.rho.as_f64());
        Self {
            mu_x: g.mu_x.as_f64(),
            mu_y: g.mu_y.as_f64(),
            rho,
            inv_sx: 1.0 / sx,
            inv_sy: 1.0 / sy,
            inv_d: 1.0 / (1.0 - rho * rho),
            half_w: s * sx,
            half_h: s * sy,
        }
    }

    /// Normalized offsets `(a, b) = (dx/σx, dy/σy)` or `None` outside the support box.
    #[inline]
    pub fn offsets(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let dx = x - self.mu_x;
        let dy = y - self.mu_y;
        if dx.abs() > self.half_w || dy.abs() > self.half_h {
            None
        } else {
            Some((dx * self.inv_sx, dy * self.inv_sy))
        }
    }

    /// Quadratic form `Q` for normalized offsets.
    #[inline]
    pub fn quad(&self, a: f64, b: f64) -> f64 {
        (a * a - 2.0 * self.rho * a * b + b * b) * self.inv_d
    }

    #[inline]
    pub fn weight(&self, x: f64, y: f64) -> f64 {
        match self.offsets(x, y) {
            Some((a, b)) => (-0.5 * self.quad(a, b)).exp(),
            None => 0.0,
        }
    }

    /// Inclusive pixel-index range whose centers may fall inside the support
    /// box, clipped to `[0, n)`; `None` when empty.
    pub fn pixel_span(center: f64, half: f64, n: u32) -> Option<(u32, u32)> {
        // centers at i + 0.5; widen by one pixel so the exact box test decides
        let lo = (center - half - 0.5).floor() - 1.0;
        let hi = (center + half - 0.5).ceil() + 1.0;
        let lo = lo.max(0.0);
        let hi = hi.min(f64::from(n) - 1.0);
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return None;
        }
        Some((lo as u32, hi as u32))
    }

    pub fn x_span(&self, width: u32) -> Option<(u32, u32)> {
        Self::pixel_span(self.mu_x, self.half_w, width)
    }

    pub fn y_span(&self, height: u32) -> Option<(u32, u32)> {
        Self::pixel_span(self.mu_y, self.half_h, height)
    }
}

/// Truncated unnormalized Gaussian `exp(-Q/2)` at `(x, y)`; exactly 0 outside
/// the `s`-box.
pub fn eval_gaussian<T: Scalar>(g: &GaussianGeom<T>, x: T, y: T, s: T) -> T {
    T::from_f64_lossy(Prepared::new(g, s.as_f64()).weight(x.as_f64(), y.as_f64()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token<T> {
    pub geom: GaussianGeom<T>,
    pub f: Vec<T>,
}

impl<T: Scalar> Token<T> {
    pub fn new(geom: GaussianGeom<T>, f: Vec<T>) -> Self {
        Self { geom, f }
    }
}

/// Ordered tokens for a `width × height` image with support factor `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSet<T> {
    pub tokens: Vec<Token<T>>,
    pub width: u32,
    pub height: u32,
    pub s: T,
}

impl<T: Scalar> TokenSet<T> {
    /// Validated constructor; an empty token list is allowed.
    pub fn new(tokens: Vec<Token<T>>, width: u32, height: u32, s: T) -> Result<Self> {
        let ts = Self {
            tokens,
            width,
            height,
            s,
        };
        ts.validate()?;
        Ok(ts)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvariantViolation(format!(
                "token set frame {}x{}",
                self.width, self.height
            )));
        }
        if !(self.s.is_finite() && self.s > T::zero()) {
            return Err(Error::InvariantViolation(format!("support factor {}", self.s)));
        }
        let c_f = self.tokens.first().map_or(1, |t| t.f.len());
        for (i, t) in self.tokens.iter().enumerate() {
            if t.f.is_empty() || t.f.len() != c_f {
                return Err(Error::InvariantViolation(format!(
                    "token {i} has {} features, expected {c_f} (>= 1)",
                    t.f.len()
                )));
            }
            if t.f.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvariantViolation(format!("token {i} has a non-finite feature")));
            }
            t.geom
                .validate(self.width, self.height, self.s)
                .map_err(|e| Error::InvariantViolation(format!("token {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Feature channel count, `None` for an empty set.
    pub fn channels(&self) -> Option<usize> {
        self.tokens.first().map(|t| t.f.len())
    }

    pub fn geoms(&self) -> Vec<GaussianGeom<T>> {
        self.tokens.iter().map(|t| t.geom).collect()
    }

    pub fn cast<U: Scalar>(&self) -> TokenSet<U> {
        TokenSet {
            tokens: self
                .tokens
                .iter()
                .map(|t| Token {
                    geom: t.geom.cast(),
                    f: t.f.iter().map(|v| U::from_f64_lossy(v.as_f64())).collect(),
                })
                .collect(),
            width: self.width,
            height: self.height,
            s: U::from_f64_lossy(self.s.as_f64()),
        }
    }

    /// Same geometry with every feature vector replaced by `[1]`.
    pub fn with_unit_features(&self) -> TokenSet<T> {
        TokenSet {
            tokens: self
                .tokens
                .iter()
                .map(|t| Token::new(t.geom, vec![T::one()]))
                .collect(),
            width: self.width,
            height: self.height,
            s: self.s,
        }
    }
}

/// Tokens initialized from regions with zero features.
pub fn init_from_regions<T: Scalar>(
    regions: &[Region],
    width: u32,
    height: u32,
    c_f: usize,
    s: T,
) -> Result<TokenSet<T>> {
    check_regions(regions, width, height)?;
    if c_f == 0 {
        return Err(Error::InvalidInput("c_f must be >= 1".into()));
    }
    let tokens = regions
        .iter()
        .map(|r| Token::new(GaussianGeom::from_region(r), vec![T::zero(); c_f]))
        .collect();
    TokenSet::new(tokens, width, height, s)
}

/// Tokens initialized from regions with each region's mean color (in
/// `[0, 1]` scale) as the feature vector; `c_f` equals the image channels.
pub fn init_from_image<T: Scalar>(regions: &[Region], img: &RasterImage, s: T) -> Result<TokenSet<T>> {
    check_regions(regions, img.width(), img.height())?;
    let c = img.channels() as usize;
    let tokens = regions
        .iter()
        .map(|r| {
            let mut sum = vec![0f64; c];
            for y in r.y1..r.y2 {
                for x in r.x1..r.x2 {
                    for (k, acc) in sum.iter_mut().enumerate() {
                        *acc += f64::from(img.get(x, y, k as u32));
                    }
                }
            }
            let n = r.area() as f64 * 255.0;
            Token::new(
                GaussianGeom::from_region(r),
                sum.into_iter().map(|v| T::from_f64_lossy(v / n)).collect(),
            )
        })
        .collect();
    TokenSet::new(tokens, img.width(), img.height(), s)
}

fn check_regions(regions: &[Region], width: u32, height: u32) -> Result<()> {
    if regions.is_empty() {
        return Err(Error::InvalidInput("no regions".into()));
    }
    match regions.iter().find(|r| !r.is_valid_within(width, height)) {
        Some(r) => Err(Error::RegionOutOfBounds {
            x1: r.x1,
            y1: r.y1,
            x2: r.x2,
            y2: r.y2,
            width,
            height,
        }),
        None => Ok(()),
    }
}
