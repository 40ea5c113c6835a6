//! Deterministic test images.

use crate::imageio::RasterImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// RGB image with a smooth two-axis gradient and a 16x16 checkerboard of
/// 4-pixel black and white cells centered in the frame. Needs sides >= 16.
pub fn gradient_with_checkerboard(width: u32, height: u32) -> RasterImage {
    let (cx, cy) = (width / 2 - 8, height / 2 - 8);
    let mut data = Vec::with_capacity((width * height * 3) as usize);
    for y in 0..height {
        for x in 0..width {
            let in_patch = (cx..cx + 16).contains(&x) && (cy..cy + 16).contains(&y);
            if in_patch {
                let on = ((x - cx) / 4 + (y - cy) / 4) % 2 == 0;
                let v = if on { 255.0 } else { 0.0 };
                data.extend([v, v, v]);
            } else {
                let u = x as f32 / (width - 1).max(1) as f32;
                let v = y as f32 / (height - 1).max(1) as f32;
                data.extend([40.0 + 180.0 * u, 60.0 + 140.0 * v, 200.0 - 120.0 * (u + v) / 2.0]);
            }
        }
    }
    RasterImage::new(width, height, 3, data).expect("values lie in [0, 255]")
}

/// Grayscale image whose left half is constant 128 and whose right half is
/// uniform noise on integers 0..=255.
pub fn half_constant_half_noise(width: u32, height: u32, seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity((width * height) as usize);
    for _ in 0..height {
        for x in 0..width {
            data.push(if x < width / 2 { 128.0 } else { f32::from(rng.gen::<u8>()) });
        }
    }
    RasterImage::new(width, height, 1, data).expect("values lie in [0, 255]")
}
