//! Gradient-entropy region complexity `m = h·w·H^λ`.
//!
//! `H` is the Shannon entropy (natural log) of a region's gradient-magnitude
//! histogram over the fixed range `[0, g_max]`, so entropies are comparable
//! across regions.

use crate::error::{Error, Result};
use crate::imageio::{GradientMap, G_MAX};
use serde::{Deserialize, Serialize};

pub const DEFAULT_LAMBDA: f64 = 2.5;
pub const DEFAULT_BINS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityConfig {
    pub lambda: f64,
    pub bins: usize,
    pub g_max: f32,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            bins: DEFAULT_BINS,
            g_max: G_MAX,
        }
    }
}

impl ComplexityConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidInput(format!("bins = {} (need >= 2)", self.bins)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("lambda = {} (need >= 0)", self.lambda)));
        }
        if !(self.g_max.is_finite() && self.g_max > 0.0) {
            return Err(Error::InvalidInput(format!("g_max = {} (need > 0)", self.g_max)));
        }
        Ok(())
    }
}

/// Axis-aligned pixel rectangle `[x1, x2) × [y1, y2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    pub x1: u32,
    pub y1: u32,
    pub x2: u32,
    pub y2: u32,
}

impl Region {
    pub const fn new(x1: u32, y1: u32, x2: u32, y2: u32) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub const fn full(width: u32, height: u32) -> Self {
        Self::new(0, 0, width, height)
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.x2 - self.x1
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.y2 - self.y1
    }

    #[inline]
    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    /// Continuous-frame center `((x1+x2)/2, (y1+y2)/2)`.
    pub fn center(&self) -> (f64, f64) {
        (
            (f64::from(self.x1) + f64::from(self.x2)) / 2.0,
            (f64::from(self.y1) + f64::from(self.y2)) / 2.0,
        )
    }

    /// Half-open membership of an integer point.
    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= i64::from(self.x1) && x < i64::from(self.x2) && y >= i64::from(self.y1) && y < i64::from(self.y2)
    }

    pub fn intersects(&self, other: &Region) -> bool {
        self.x1 < other.x2 && other.x1 < self.x2 && self.y1 < other.y2 && other.y1 < self.y2
    }

    pub fn is_valid_within(&self, width: u32, height: u32) -> bool {
        self.x1 < self.x2 && self.y1 < self.y2 && self.x2 <= width && self.y2 <= height
    }

    fn check_within(&self, width: u32, height: u32) -> Result<()> {
        if self.is_valid_within(width, height) {
            Ok(())
        } else {
            Err(Error::RegionOutOfBounds {
                x1: self.x1,
                y1: self.y1,
                x2: self.x2,
                y2: self.y2,
                width,
                height,
            })
        }
    }

    fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.y1..self.y2).flat_map(move |y| (self.x1..self.x2).map(move |x| (x, y)))
    }
}

#[inline]
fn bin_index(v: f32, cfg: &ComplexityConfig) -> usize {
    let pos = (f64::from(v) / f64::from(cfg.g_max) * cfg.bins as f64).floor();
    if pos <= 0.0 {
        0
    } else {
        (pos as usize).min(cfg.bins - 1)
    }
}

/// Normalized histogram of `e` over `r`: equal-width bins on `[0, g_max]`.
pub fn gradient_histogram(e: &GradientMap, r: &Region, cfg: &ComplexityConfig) -> Result<Vec<f64>> {
    r.check_within(e.width(), e.height())?;
    cfg.validate()?;
    let mut counts = vec![0u64; cfg.bins];
    for (x, y) in r.pixels() {
        counts[bin_index(e.get(x, y), cfg)] += 1;
    }
    let n = r.area() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// `H = -Σ q ln q` with `0·ln 0 = 0`.
pub fn entropy(q: &[f64]) -> Result<f64> {
    if q.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::InvalidDistribution("entries must be finite and non-negative".into()));
    }
    let sum: f64 = q.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
    }
    let h: f64 = q.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
    // rounding can leave -0.0 or a tiny negative for one-hot inputs
    Ok(h.max(0.0))
}

/// `m = h·w·H^λ`, multiplied by the mean of `importance` over `r` when given.
pub fn region_complexity(
    e: &GradientMap,
    r: &Region,
    cfg: &ComplexityConfig,
    importance: Option<&GradientMap>,
) -> Result<f64> {
    let q = gradient_histogram(e, r, cfg)?;
    let h = entropy(&q)?;
    let mut m = r.area() as f64 * h.powf(cfg.lambda);
    if let Some(imp) = importance {
        if imp.width() != e.width() || imp.height() != e.height() {
            return Err(Error::ShapeMismatch(format!(
                "importance map {}x{} vs gradient map {}x{}",
                imp.width(),
                imp.height(),
                e.width(),
                e.height()
            )));
        }
        let total: f64 = r.pixels().map(|(x, y)| f64::from(imp.get(x, y))).sum();
        m *= total / r.area() as f64;
    }
    Ok(m)
}
