//! Raster image I/O (8-bit PNG, binary PGM/PPM), grayscale conversion and
//! Sobel gradient magnitudes.
//!
//! Pixel values are `f32` in `[0, 255]` everywhere in the crate. Only the
//! encoder rescales to `[0, 1]`, and only inside its loss.

use crate::error::{Error, Result};
use rayon::prelude::*;
use std::fs;
use std::path::Path;

/// Upper bound of the 3x3 Sobel magnitude on `[0, 255]` input: `4·√2·255`.
pub const G_MAX: f32 = (4.0 * std::f64::consts::SQRT_2 * 255.0) as f32;

/// Value substituted for zero entries of an importance map.
pub const IMPORTANCE_FLOOR: f32 = 1e-3;

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Row-major interleaved image with 1 (gray) or 3 (RGB) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    channels: u32,
    data: Vec<f32>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, channels: u32, data: Vec<f32>) -> Result<Self> {
        Self::check_shape(width, height, channels, data.len())?;
        if let Some(v) = data.iter().find(|v| !(v.is_finite() && (0.0..=255.0).contains(*v))) {
            return Err(Error::InvalidImage(format!("pixel value {v} outside [0, 255]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds an image from arbitrary finite values, clamping them into `[0, 255]`.
    pub fn from_unclamped(width: u32, height: u32, channels: u32, mut data: Vec<f32>) -> Result<Self> {
        Self::check_shape(width, height, channels, data.len())?;
        for v in &mut data {
            if !v.is_finite() {
                return Err(Error::InvalidImage("non-finite pixel value".into()));
            }
            *v = v.clamp(0.0, 255.0);
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Image filled with a single value in every channel.
    pub fn filled(width: u32, height: u32, channels: u32, value: f32) -> Result<Self> {
        let len = width as usize * height as usize * channels as usize;
        Self::new(width, height, channels, vec![value; len])
    }

    fn check_shape(width: u32, height: u32, channels: u32, len: usize) -> Result<()> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!("{channels} channels (expected 1 or 3)")));
        }
        let expected = width as usize * height as usize * channels as usize;
        if len != expected {
            return Err(Error::InvalidImage(format!(
                "data length {len} does not match {width}x{height}x{channels}"
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: u32) -> f32 {
        self.data[((y as usize * self.width as usize + x as usize) * self.channels as usize) + c as usize]
    }

    /// Clamp-then-round-half-even quantization to 8 bits, as stored by [`save_image`].
    pub fn quantized(&self) -> RasterImage {
        let data = quantize(&self.data).into_iter().map(f32::from).collect();
        RasterImage { data, ..*self }
    }
}

/// Single-channel non-negative map: Sobel magnitudes or importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMap {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl GradientMap {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width as usize * height as usize {
            return Err(Error::InvalidInput(format!(
                "map data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("map values must be finite and non-negative".into()));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[y as usize * self.width as usize + x as usize]
    }
}

/// Clamps to `[0, 255]` and rounds half to even.
pub fn quantize(values: &[f32]) -> Vec<u8> {
    values
        .iter()
        .map(|v| v.clamp(0.0, 255.0).round_ties_even() as u8)
        .collect()
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::FileNotFound(path.to_path_buf()))
        }
        Err(e) => return Err(e.into()),
    };
    decode_image(&bytes)
}

/// Decodes PNG or binary PNM bytes, sniffing the format from the content.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage> {
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        match bytes[1] {
            b'5' => decode_pnm(bytes, 1),
            b'6' => decode_pnm(bytes, 3),
            other => Err(Error::UnsupportedFormat(format!("PNM variant P{}", other as char))),
        }
    } else {
        Err(Error::CorruptImage("not a PNG or binary PNM file".into()))
    }
}

fn decode_png(bytes: &[u8]) -> Result<RasterImage> {
    use image::DynamicImage;
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::CorruptImage(e.to_string()))?;
    let (w, h) = (img.width(), img.height());
    let (channels, raw) = match img {
        DynamicImage::ImageLuma8(buf) => (1, buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => (3, buf.into_raw()),
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) | DynamicImage::ImageLumaA16(_) => {
            return Err(Error::UnsupportedFormat("16-bit PNG".into()))
        }
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageRgba8(_) => {
            return Err(Error::UnsupportedFormat("PNG with alpha channel".into()))
        }
        other => return Err(Error::UnsupportedFormat(format!("PNG color type {:?}", other.color()))),
    };
    RasterImage::new(w, h, channels, raw.into_iter().map(f32::from).collect())
}

struct PnmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PnmCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptImage("malformed PNM header".into()))
    }
}

fn decode_pnm(bytes: &[u8], channels: u32) -> Result<RasterImage> {
    let mut cur = PnmCursor { bytes, pos: 2 };
    let width = cur.number()?;
    let height = cur.number()?;
    let maxval = cur.number()?;
    if maxval == 0 {
        return Err(Error::CorruptImage("PNM maxval is zero".into()));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedFormat("16-bit PNM".into()));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::CorruptImage("missing separator after PNM header".into())),
    }
    if width == 0 || height == 0 {
        return Err(Error::CorruptImage(format!("PNM dimensions {width}x{height}")));
    }
    let len = width as usize * height as usize * channels as usize;
    let raster = bytes
        .get(cur.pos..cur.pos + len)
        .ok_or_else(|| Error::CorruptImage("truncated PNM raster".into()))?;
    let scale = 255.0 / maxval as f32;
    let mut data = Vec::with_capacity(len);
    for &b in raster {
        if u32::from(b) > maxval {
            return Err(Error::CorruptImage(format!("sample {b} exceeds maxval {maxval}")));
        }
        data.push(if maxval == 255 { f32::from(b) } else { (f32::from(b) * scale).min(255.0) });
    }
    RasterImage::new(width, height, channels, data)
}

/// Writes the image quantized to 8 bits; the format follows the extension
/// (`.png`, `.ppm`, `.pgm`, `.pnm`).
pub fn save_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let bytes = match ext.as_str() {
        "png" => encode_png(img)?,
        "ppm" | "pgm" | "pnm" => encode_pnm(img),
        _ => return Err(Error::UnsupportedFormat(format!("cannot infer format from {}", path.display()))),
    };
    fs::write(path, bytes)?;
    Ok(())
}

/// Binary PGM (1 channel) or PPM (3 channels): maxval 255, no comments,
/// single-space/newline separators.
pub fn encode_pnm(img: &RasterImage) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(quantize(&img.data));
    out
}

pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>> {
    let color = if img.channels == 1 {
        image::ExtendedColorType::L8
    } else {
        image::ExtendedColorType::Rgb8
    };
    let mut out = Vec::new();
    image::ImageEncoder::write_image(
        image::codecs::png::PngEncoder::new(&mut out),
        &quantize(&img.data),
        img.width,
        img.height,
        color,
    )
    .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    Ok(out)
}

/// BT.601 luma for RGB input; single-channel input is returned unchanged.
pub fn to_grayscale(img: &RasterImage) -> RasterImage {
    if img.channels == 1 {
        return img.clone();
    }
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| {
            let y = 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
            (y as f32).clamp(0.0, 255.0)
        })
        .collect();
    RasterImage {
        width: img.width,
        height: img.height,
        channels: 1,
        data,
    }
}

/// Per-pixel `√(gx² + gy²)` with the 3x3 Sobel kernels and clamp-to-edge padding.
pub fn sobel_magnitude(gray: &RasterImage) -> Result<GradientMap> {
    if gray.channels != 1 {
        return Err(Error::InvalidInput(format!(
            "sobel_magnitude expects 1 channel, got {}",
            gray.channels
        )));
    }
    let (w, h) = (gray.width as i64, gray.height as i64);
    let px = |x: i64, y: i64| -> f64 {
        let xc = x.clamp(0, w - 1) as usize;
        let yc = y.clamp(0, h - 1) as usize;
        f64::from(gray.data[yc * w as usize + xc])
    };
    let mut data = vec![0f32; (w * h) as usize];
    data.par_chunks_mut(w as usize).enumerate().for_each(|(y, row)| {
        let y = y as i64;
        for (x, out) in row.iter_mut().enumerate() {
            let x = x as i64;
            let gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            let gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
            *out = ((gx * gx + gy * gy).sqrt() as f32).min(G_MAX);
        }
    });
    Ok(GradientMap {
        width: gray.width,
        height: gray.height,
        data,
    })
}

/// Gradient map of an image of any channel count (grayscale first).
pub fn gradient_map(img: &RasterImage) -> Result<GradientMap> {
    sobel_magnitude(&to_grayscale(img))
}

/// Turns a grayscale image into an importance map; zeros become [`IMPORTANCE_FLOOR`].
pub fn importance_from_image(img: &RasterImage) -> GradientMap {
    let gray = to_grayscale(img);
    let data = gray
        .data
        .iter()
        .map(|&v| if v <= 0.0 { IMPORTANCE_FLOOR } else { v })
        .collect();
    GradientMap {
        width: gray.width,
        height: gray.height,
        data,
    }
}

pub fn load_importance(path: impl AsRef<Path>) -> Result<GradientMap> {
    Ok(importance_from_image(&load_image(path)?))
}
