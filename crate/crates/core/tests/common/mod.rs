#![allow(dead_code)]

//! Straight-line reference implementations and test fixtures.

use adasplat_core::imageio::GradientMap;
use adasplat_core::RasterImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(x1, x2, y1, y2)`, half-open.
pub type Rect = (u32, u32, u32, u32);

pub fn rect_of(r: &adasplat_core::Region) -> Rect {
    (r.x1, r.x2, r.y1, r.y2)
}

fn entropy_of_rect(e: &GradientMap, r: Rect, g_max: f32) -> f64 {
    let mut counts = vec![0u64; 512];
    for y in r.2..r.3 {
        for x in r.0..r.1 {
            let v = f64::from(e.get(x, y));
            let mut b = (v / f64::from(g_max) * 512.0).floor();
            if b < 0.0 {
                b = 0.0;
            }
            let b = (b as usize).min(511);
            counts[b] += 1;
        }
    }
    let n = f64::from(r.1 - r.0) * f64::from(r.3 - r.2);
    let mut h = 0.0;
    for c in counts {
        if c > 0 {
            let p = c as f64 / n;
            h += -p * p.ln();
        }
    }
    h.max(0.0)
}

fn metric(e: &GradientMap, r: Rect, lambda: f64, g_max: f32) -> f64 {
    let area = f64::from(r.1 - r.0) * f64::from(r.3 - r.2);
    area * entropy_of_rect(e, r, g_max).powf(lambda)
}

fn halves_w(r: Rect) -> (Rect, Rect) {
    let mid = r.0 + (r.1 - r.0) / 2;
    ((r.0, mid, r.2, r.3), (mid, r.1, r.2, r.3))
}

fn halves_h(r: Rect) -> (Rect, Rect) {
    let mid = r.2 + (r.3 - r.2) / 2;
    ((r.0, r.1, r.2, mid), (r.0, r.1, mid, r.3))
}

/// Region initialization loop, recomputing every complexity each pass.
pub fn reference_partition(e: &GradientMap, l: usize, lambda: f64, s_min: u32, g_max: f32) -> Option<Vec<Rect>> {
    let mut list: Vec<Rect> = vec![(0, e.width(), 0, e.height())];
    while list.len() < l {
        let ms: Vec<f64> = list.iter().map(|&r| metric(e, r, lambda, g_max)).collect();
        let mut best: Option<usize> = None;
        for i in 0..list.len() {
            let r = list[i];
            let (w, h) = (r.1 - r.0, r.3 - r.2);
            if w > s_min || h > s_min {
                match best {
                    None => best = Some(i),
                    Some(b) if ms[i] > ms[b] => best = Some(i),
                    _ => {}
                }
            }
        }
        let i = best?;
        let r = list[i];
        let (w, h) = (r.1 - r.0, r.3 - r.2);
        let (a, b) = if w != h {
            if w > h {
                halves_w(r)
            } else {
                halves_h(r)
            }
        } else {
            let (r1, r2) = halves_w(r);
            let (r3, r4) = halves_h(r);
            let m1 = metric(e, r1, lambda, g_max);
            let m2 = metric(e, r2, lambda, g_max);
            let m3 = metric(e, r3, lambda, g_max);
            let m4 = metric(e, r4, lambda, g_max);
            if m1.min(m2) <= m3.min(m4) {
                (r1, r2)
            } else {
                (r3, r4)
            }
        };
        list.remove(i);
        list.insert(i, b);
        list.insert(i, a);
    }
    Some(list)
}

fn snap_1d(v: f64, s_min: u32, limit: u32) -> u32 {
    let mut best = 0u32;
    let mut best_d = f64::INFINITY;
    let mut g = 0u32;
    while g < limit {
        let d = (v - f64::from(g)).abs();
        if d < best_d {
            best_d = d;
            best = g;
        }
        g += s_min;
    }
    best
}

pub fn reference_snap(means: &[(f64, f64)], s_min: u32, w: u32, h: u32) -> Vec<(u32, u32)> {
    means
        .iter()
        .map(|&(x, y)| (snap_1d(x, s_min, w), snap_1d(y, s_min, h)))
        .collect()
}

/// Count-based re-partition over snapped means.
pub fn reference_count_partition(snapped: &[(u32, u32)], s_min: u32, w: u32, h: u32) -> Option<Vec<Rect>> {
    let l = snapped.len();
    let mut list: Vec<Rect> = vec![(0, w, 0, h)];
    let inside = |r: Rect, p: (u32, u32)| r.0 <= p.0 && p.0 < r.1 && r.2 <= p.1 && p.1 < r.3;
    while list.len() < l {
        let counts: Vec<usize> = list
            .iter()
            .map(|&r| snapped.iter().filter(|&&p| inside(r, p)).count())
            .collect();
        let mut best: Option<usize> = None;
        for i in 0..list.len() {
            let r = list[i];
            let eligible = (r.1 - r.0) > s_min || (r.3 - r.2) > s_min;
            if eligible && best.is_none_or(|b| counts[i] > counts[b]) {
                best = Some(i);
            }
        }
        let i = best?;
        let r = list[i];
        let (rw, rh) = (r.1 - r.0, r.3 - r.2);
        let (a, b) = if rw > rh {
            halves_w(r)
        } else if rw < rh {
            halves_h(r)
        } else {
            let line = (r.0 + r.1) / 2;
            if snapped.iter().any(|&p| p.0 == line && inside(r, p)) {
                halves_h(r)
            } else {
                halves_w(r)
            }
        };
        list.splice(i..=i, [a, b]);
    }
    Some(list)
}

/// `(σx, σy, ρ, μx, μy)` per region.
pub fn reference_calibrate(means: &[(f64, f64)], s_min: u32, w: u32, h: u32) -> Option<Vec<[f64; 5]>> {
    let snapped = reference_snap(means, s_min, w, h);
    let regions = reference_count_partition(&snapped, s_min, w, h)?;
    Some(
        regions
            .iter()
            .map(|r| {
                let (rw, rh) = (f64::from(r.1 - r.0), f64::from(r.3 - r.2));
                [rw / 6.0, rh / 6.0, 0.0, f64::from(r.0) + rw / 2.0, f64::from(r.2) + rh / 2.0]
            })
            .collect(),
    )
}

/// Truncated Gaussian weight at a pixel center.
pub fn reference_weight(g: [f64; 5], s: f64, px: u32, py: u32) -> f64 {
    let [sx, sy, rho, mx, my] = g;
    let dx = f64::from(px) + 0.5 - mx;
    let dy = f64::from(py) + 0.5 - my;
    if dx.abs() > s * sx || dy.abs() > s * sy {
        return 0.0;
    }
    let (a, b) = (dx / sx, dy / sy);
    (-(a * a - 2.0 * rho * a * b + b * b) / (2.0 * (1.0 - rho * rho))).exp()
}

/// Seeded test scenes: blocks, ramps, noise patches and a disk, 1 or 3 channels.
pub fn seeded_image(seed: u64, w: u32, h: u32, channels: u32) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f32> = (0..channels).map(|_| rng.gen_range(0.0..255.0)).collect();
    let mut data = vec![0f32; (w * h * channels) as usize];
    for y in 0..h {
        for x in 0..w {
            for c in 0..channels {
                data[((y * w + x) * channels + c) as usize] = base[c as usize];
            }
        }
    }
    let set = |data: &mut Vec<f32>, x: u32, y: u32, c: u32, v: f32| {
        data[((y * w + x) * channels + c) as usize] = v.clamp(0.0, 255.0);
    };
    for _ in 0..rng.gen_range(2..6) {
        let (x1, y1) = (rng.gen_range(0..w), rng.gen_range(0..h));
        let (x2, y2) = (rng.gen_range(x1 + 1..=w), rng.gen_range(y1 + 1..=h));
        let kind = rng.gen_range(0..3);
        let v0: f32 = rng.gen_range(0.0..255.0);
        for y in y1..y2 {
            for x in x1..x2 {
                for c in 0..channels {
                    let v = match kind {
                        0 => v0,
                        1 => v0 * (x - x1) as f32 / (x2 - x1) as f32,
                        _ => rng.gen_range(0.0..255.0),
                    };
                    set(&mut data, x, y, c, v);
                }
            }
        }
    }
    let (cx, cy, rad) = (rng.gen_range(0..w) as f32, rng.gen_range(0..h) as f32, rng.gen_range(2.0..12.0f32));
    for y in 0..h {
        for x in 0..w {
            if (x as f32 - cx).powi(2) + (y as f32 - cy).powi(2) < rad * rad {
                for c in 0..channels {
                    set(&mut data, x, y, c, 255.0 - base[c as usize]);
                }
            }
        }
    }
    RasterImage::new(w, h, channels, data).unwrap()
}
