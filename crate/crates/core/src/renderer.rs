//! Splatting renderer: `R(x, y, k) = Σ_i g_i(x, y) · f_i[k]`.
//!
//! Both render paths accumulate every pixel in ascending token order in
//! `f64` and evaluate weights through the same code, so the tiled path is
//! bitwise equal to the naive triple loop regardless of thread count.

use crate::gaussians::{Prepared, TokenSet};
use crate::scalar::Scalar;
use rayon::prelude::*;

pub mod gradcheck;

/// Rows per parallel render tile.
const TILE_ROWS: usize = 8;

/// Dense row-major `height × width × channels` map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T> {
    pub width: u32,
    pub height: u32,
    pub channels: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> FeatureMap<T> {
    pub fn zeros(width: u32, height: u32, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![T::zero(); width as usize * height as usize * channels],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, k: usize) -> T {
        self.data[(y as usize * self.width as usize + x as usize) * self.channels + k]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, k: usize, v: T) {
        self.data[(y as usize * self.width as usize + x as usize) * self.channels + k] = v;
    }

    pub fn same_shape<U>(&self, other: &FeatureMap<U>) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn max_abs_diff(&self, other: &FeatureMap<T>) -> f64 {
        assert!(self.same_shape(other), "feature map shapes differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max)
    }
}

/// Gradient of a scalar loss with respect to one token's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenGrad<T> {
    pub d_sigma_x: T,
    pub d_sigma_y: T,
    pub d_rho: T,
    pub d_mu_x: T,
    pub d_mu_y: T,
    pub d_f: Vec<T>,
}

impl<T: Scalar> TokenGrad<T> {
    /// Geometry partials in `(σx, σy, ρ, μx, μy)` order.
    pub fn geom(&self) -> [T; 5] {
        [self.d_sigma_x, self.d_sigma_y, self.d_rho, self.d_mu_x, self.d_mu_y]
    }

    pub fn is_finite(&self) -> bool {
        self.geom().iter().chain(&self.d_f).all(|v| v.is_finite())
    }
}

/// One gradient record per token, in token order.
pub type TokenGradients<T> = Vec<TokenGrad<T>>;

struct Splat {
    g: Prepared,
    f: Vec<f64>,
    xs: Option<(u32, u32)>,
    ys: Option<(u32, u32)>,
}

fn prepare<T: Scalar>(ts: &TokenSet<T>, channels: usize) -> Vec<Splat> {
    let s = ts.s.as_f64();
    ts.tokens
        .iter()
        .map(|t| {
            assert_eq!(t.f.len(), channels, "token feature count differs from render channels");
            let g = Prepared::new(&t.geom, s);
            Splat {
                xs: g.x_span(ts.width),
                ys: g.y_span(ts.height),
                g,
                f: t.f.iter().map(|v| v.as_f64()).collect(),
            }
        })
        .collect()
}

#[inline]
fn center(i: u32) -> f64 {
    f64::from(i) + 0.5
}

/// Tiled, truncation-aware render of `ts` into a `channels`-deep map.
pub fn render<T: Scalar>(ts: &TokenSet<T>, channels: usize) -> FeatureMap<T> {
    let splats = prepare(ts, channels);
    let (w, h) = (ts.width as usize, ts.height as usize);
    let row_len = w * channels;
    let mut out = FeatureMap::zeros(ts.width, ts.height, channels);
    out.data
        .par_chunks_mut(row_len * TILE_ROWS)
        .enumerate()
        .for_each(|(tile, chunk)| {
            let y0 = tile * TILE_ROWS;
            let rows = chunk.len() / row_len;
            let y1 = y0 + rows - 1;
            let mut acc = vec![0f64; chunk.len()];
            for sp in &splats {
                let (Some((xa, xb)), Some((ya, yb))) = (sp.xs, sp.ys) else {
                    continue;
                };
                let (ya, yb) = (ya as usize, yb as usize);
                if yb < y0 || ya > y1 {
                    continue;
                }
                for y in ya.max(y0)..=yb.min(y1) {
                    let cy = center(y as u32);
                    let row = &mut acc[(y - y0) * row_len..(y - y0 + 1) * row_len];
                    for x in xa..=xb {
                        let wgt = sp.g.weight(center(x), cy);
                        if wgt == 0.0 {
                            continue;
                        }
                        let px = &mut row[x as usize * channels..(x as usize + 1) * channels];
                        for (a, f) in px.iter_mut().zip(&sp.f) {
                            *a += wgt * f;
                        }
                    }
                }
            }
            for (o, a) in chunk.iter_mut().zip(acc) {
                *o = T::from_f64_lossy(a);
            }
        });
    debug_assert_eq!(out.data.len(), h * row_len);
    out
}

/// Reference render: every pixel × every token × every channel.
pub fn render_naive<T: Scalar>(ts: &TokenSet<T>, channels: usize) -> FeatureMap<T> {
    let splats = prepare(ts, channels);
    let mut out = FeatureMap::zeros(ts.width, ts.height, channels);
    let mut acc = vec![0f64; channels];
    for y in 0..ts.height {
        for x in 0..ts.width {
            acc.fill(0.0);
            for sp in &splats {
                let wgt = sp.g.weight(center(x), center(y));
                for (a, f) in acc.iter_mut().zip(&sp.f) {
                    *a += wgt * f;
                }
            }
            for (k, a) in acc.iter().enumerate() {
                out.set(x, y, k, T::from_f64_lossy(*a));
            }
        }
    }
    out
}

/// Splat of unit features: the Gaussian layout as a single-channel density.
pub fn gaussian_density_map<T: Scalar>(ts: &TokenSet<T>) -> FeatureMap<T> {
    render(&ts.with_unit_features(), 1)
}

/// Gradients of `L = Σ upstream · render(ts)` for every token parameter.
///
/// The truncation box is held fixed: no gradient flows through box membership.
pub fn backward<T: Scalar>(ts: &TokenSet<T>, upstream: &FeatureMap<T>) -> TokenGradients<T> {
    let channels = upstream.channels;
    assert_eq!(
        (upstream.width, upstream.height),
        (ts.width, ts.height),
        "upstream gradient shape differs from the token frame"
    );
    let splats = prepare(ts, channels);
    splats
        .par_iter()
        .map(|sp| {
            let mut geo = [0f64; 5];
            let mut d_f = vec![0f64; channels];
            if let (Some((xa, xb)), Some((ya, yb))) = (sp.xs, sp.ys) {
                let g = &sp.g;
                for y in ya..=yb {
                    let cy = center(y);
                    for x in xa..=xb {
                        let Some((a, b)) = g.offsets(center(x), cy) else {
                            continue;
                        };
                        let q = g.quad(a, b);
                        let wgt = (-0.5 * q).exp();
                        let base = (y as usize * ts.width as usize + x as usize) * channels;
                        let up = &upstream.data[base..base + channels];
                        let mut dot = 0.0;
                        for ((df, u), f) in d_f.iter_mut().zip(up).zip(&sp.f) {
                            let u = u.as_f64();
                            *df += wgt * u;
                            dot += f * u;
                        }
                        if dot == 0.0 {
                            continue;
                        }
                        // -dQ/2 terms
                        let ca = g.inv_d * (a - g.rho * b);
                        let cb = g.inv_d * (b - g.rho * a);
                        let s = dot * wgt;
                        geo[0] += s * ca * a * g.inv_sx;
                        geo[1] += s * cb * b * g.inv_sy;
                        geo[2] += s * g.inv_d * (a * b - g.rho * q);
                        geo[3] += s * ca * g.inv_sx;
                        geo[4] += s * cb * g.inv_sy;
                    }
                }
            }
            let c = T::from_f64_lossy;
            TokenGrad {
                d_sigma_x: c(geo[0]),
                d_sigma_y: c(geo[1]),
                d_rho: c(geo[2]),
                d_mu_x: c(geo[3]),
                d_mu_y: c(geo[4]),
                d_f: d_f.into_iter().map(c).collect(),
            }
        })
        .collect()
}
