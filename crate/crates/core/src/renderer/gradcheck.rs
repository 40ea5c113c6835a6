//! Finite-difference audit of [`backward`](super::backward).
//!
//! Each probe draws a random token set, one token, one pixel inside that
//! token's support box and one raw parameter, puts random upstream weights on
//! that pixel only, and compares the analytic partial with a central
//! difference of the forward render. Runs in `f64`.

use super::{backward, render_naive, FeatureMap};
use crate::gaussians::{GaussianGeom, Token, TokenSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Central-difference step on the raw parameter.
pub const FD_STEP: f64 = 1e-3;
/// Maximum accepted relative error.
pub const REL_TOLERANCE: f64 = 1e-3;
/// Below this analytic magnitude the absolute error is checked instead.
pub const SMALL_MAGNITUDE: f64 = 1e-4;
/// Absolute tolerance for small-magnitude partials.
pub const ABS_TOLERANCE: f64 = 1e-6;

pub const PARAM_NAMES: [&str; 5] = ["sigma_x", "sigma_y", "rho", "mu_x", "mu_y"];

const MAP_SIZE: u32 = 16;
const TOKENS: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct Probe {
    pub token: usize,
    pub x: u32,
    pub y: u32,
    /// `sigma_x`, `sigma_y`, `rho`, `mu_x`, `mu_y` or `f[k]`.
    pub param: String,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
    pub abs_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub probes: usize,
    pub failures: usize,
    /// Over probes whose analytic magnitude is at least [`SMALL_MAGNITUDE`].
    pub max_rel_error: f64,
    /// Over probes whose analytic magnitude is below [`SMALL_MAGNITUDE`].
    pub max_small_abs_error: f64,
    pub worst: Option<Probe>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Random token set for probing: moderate σ and |ρ| <= 0.8 keep the central
/// difference truncation error far below the tolerance.
pub fn random_token_set(rng: &mut impl Rng, width: u32, height: u32, l: usize, c_f: usize) -> TokenSet<f64> {
    let tokens = (0..l)
        .map(|_| {
            let geom = GaussianGeom::new(
                rng.gen_range(0.8..6.0),
                rng.gen_range(0.8..6.0),
                rng.gen_range(-0.8..0.8),
                rng.gen_range(0.0..f64::from(width)),
                rng.gen_range(0.0..f64::from(height)),
            );
            Token::new(geom, (0..c_f).map(|_| rng.gen_range(-1.0..1.0)).collect())
        })
        .collect();
    TokenSet::new(tokens, width, height, 5.0).expect("sampled parameters are valid")
}

fn perturbed(ts: &TokenSet<f64>, token: usize, param: usize, delta: f64) -> TokenSet<f64> {
    let mut out = ts.clone();
    let t = &mut out.tokens[token];
    if param < 5 {
        let mut a = t.geom.as_array();
        a[param] += delta;
        t.geom = GaussianGeom::from_array(a);
    } else {
        t.f[param - 5] += delta;
    }
    out
}

fn probe_loss(ts: &TokenSet<f64>, upstream: &FeatureMap<f64>) -> f64 {
    render_naive(ts, upstream.channels)
        .data
        .iter()
        .zip(&upstream.data)
        .map(|(r, u)| r * u)
        .sum()
}

/// Pixels whose centers sit inside the token's box with enough slack that a
/// `FD_STEP` perturbation cannot move the box edge across them.
fn interior_pixels(g: &GaussianGeom<f64>, s: f64, width: u32, height: u32) -> Vec<(u32, u32)> {
    let slack = 4.0 * s * FD_STEP;
    let mut out = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let dx = (f64::from(x) + 0.5 - g.mu_x).abs();
            let dy = (f64::from(y) + 0.5 - g.mu_y).abs();
            if dx <= s * g.sigma_x - slack && dy <= s * g.sigma_y - slack {
                out.push((x, y));
            }
        }
    }
    out
}

pub fn run_probe(rng: &mut impl Rng) -> Probe {
    let c_f = rng.gen_range(1..=3);
    let ts = random_token_set(rng, MAP_SIZE, MAP_SIZE, TOKENS, c_f);
    let token = rng.gen_range(0..TOKENS);
    let pixels = interior_pixels(&ts.tokens[token].geom, ts.s, MAP_SIZE, MAP_SIZE);
    // the mean is sampled inside the frame, so the pixel holding it qualifies
    let (x, y) = pixels[rng.gen_range(0..pixels.len())];
    let param = rng.gen_range(0..5 + c_f);

    let mut upstream = FeatureMap::zeros(MAP_SIZE, MAP_SIZE, c_f);
    for k in 0..c_f {
        upstream.set(x, y, k, rng.gen_range(-1.0..1.0));
    }
    let grads = backward(&ts, &upstream);
    let g = &grads[token];
    let analytic = if param < 5 { g.geom()[param] } else { g.d_f[param - 5] };
    let numeric = (probe_loss(&perturbed(&ts, token, param, FD_STEP), &upstream)
        - probe_loss(&perturbed(&ts, token, param, -FD_STEP), &upstream))
        / (2.0 * FD_STEP);

    let abs_error = (analytic - numeric).abs();
    let scale = analytic.abs().max(numeric.abs());
    let rel_error = if scale > 0.0 { abs_error / scale } else { 0.0 };
    let passed = if analytic.abs() < SMALL_MAGNITUDE {
        abs_error < ABS_TOLERANCE
    } else {
        rel_error < REL_TOLERANCE
    };
    Probe {
        token,
        x,
        y,
        param: if param < 5 {
            PARAM_NAMES[param].to_string()
        } else {
            format!("f[{}]", param - 5)
        },
        analytic,
        numeric,
        rel_error,
        abs_error,
        passed,
    }
}

pub fn gradcheck(seed: u64, probes: usize) -> GradcheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradcheckReport {
        probes,
        failures: 0,
        max_rel_error: 0.0,
        max_small_abs_error: 0.0,
        worst: None,
    };
    let mut worst_score = -1.0;
    for _ in 0..probes {
        let p = run_probe(&mut rng);
        // score errors against their own tolerance so either kind can be worst
        let score = if p.analytic.abs() < SMALL_MAGNITUDE {
            report.max_small_abs_error = report.max_small_abs_error.max(p.abs_error);
            p.abs_error / ABS_TOLERANCE
        } else {
            report.max_rel_error = report.max_rel_error.max(p.rel_error);
            p.rel_error / REL_TOLERANCE
        };
        if !p.passed {
            report.failures += 1;
        }
        if score > worst_score {
            worst_score = score;
            report.worst = Some(p);
        }
    }
    report
}
