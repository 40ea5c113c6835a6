//! GPST token files.
//!
//! Little-endian layout:
//!
//! | offset | size | field                     |
//! |--------|------|---------------------------|
//! | 0      | 4    | magic `GPST`              |
//! | 4      | 2    | version (`u16`, 1)        |
//! | 6      | 4    | width (`u32`)             |
//! | 10     | 4    | height (`u32`)            |
//! | 14     | 4    | token count `l` (`u32`)   |
//! | 18     | 2    | feature channels `c_f` (`u16`) |
//! | 20     | 4    | support factor `s` (`f32`) |
//! | 24     | 2    | flags (`u16`)             |
//!
//! followed by `l` records of `5 + c_f` `f32`s: `σx, σy, ρ, μx, μy`, then
//! the features. File length is `26 + l·(5 + c_f)·4`.

use crate::error::{Error, Result};
use crate::gaussians::{GaussianGeom, Token, TokenSet};
use crate::scalar::Scalar;
use std::fs;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"GPST";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 26;
/// Records are single `(5 + c_f)` vectors, geometry first.
pub const FLAG_PACKED: u16 = 1;
const KNOWN_FLAGS: u16 = FLAG_PACKED;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpstHeader {
    pub version: u16,
    pub width: u32,
    pub height: u32,
    pub l: u32,
    pub c_f: u16,
    pub s: f32,
    pub flags: u16,
}

impl GpstHeader {
    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..6].copy_from_slice(&self.version.to_le_bytes());
        b[6..10].copy_from_slice(&self.width.to_le_bytes());
        b[10..14].copy_from_slice(&self.height.to_le_bytes());
        b[14..18].copy_from_slice(&self.l.to_le_bytes());
        b[18..20].copy_from_slice(&self.c_f.to_le_bytes());
        b[20..24].copy_from_slice(&self.s.to_le_bytes());
        b[24..26].copy_from_slice(&self.flags.to_le_bytes());
        b
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::CorruptFile(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if bytes[0..4] != MAGIC {
            return Err(Error::CorruptFile("bad magic".into()));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let u32_at = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
        let version = u16_at(4);
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let header = Self {
            version,
            width: u32_at(6),
            height: u32_at(10),
            l: u32_at(14),
            c_f: u16_at(18),
            s: f32::from_bits(u32_at(20)),
            flags: u16_at(24),
        };
        if header.flags & !KNOWN_FLAGS != 0 {
            return Err(Error::CorruptFile(format!("unknown flag bits {:#06x}", header.flags)));
        }
        if header.l == 0 || header.c_f == 0 {
            return Err(Error::InvariantViolation(format!(
                "l = {}, c_f = {} (both must be >= 1)",
                header.l, header.c_f
            )));
        }
        Ok(header)
    }

    pub fn record_len(&self) -> usize {
        (5 + self.c_f as usize) * 4
    }

    pub fn file_len(&self) -> usize {
        HEADER_LEN + self.l as usize * self.record_len()
    }
}

/// Serializes a token set; parameters are stored as `f32`.
pub fn encode_tokens<T: Scalar>(ts: &TokenSet<T>) -> Result<Vec<u8>> {
    let c_f = ts
        .channels()
        .ok_or_else(|| Error::InvalidInput("cannot store an empty token set".into()))?;
    let c_f = u16::try_from(c_f).map_err(|_| Error::InvalidInput(format!("{c_f} feature channels")))?;
    let l = u32::try_from(ts.len()).map_err(|_| Error::InvalidInput("too many tokens".into()))?;
    let header = GpstHeader {
        version: VERSION,
        width: ts.width,
        height: ts.height,
        l,
        c_f,
        s: ts.s.to_f32().unwrap_or(f32::NAN),
        flags: FLAG_PACKED,
    };
    let mut out = Vec::with_capacity(header.file_len());
    out.extend_from_slice(&header.to_bytes());
    for t in &ts.tokens {
        for v in t.geom.as_array().iter().chain(&t.f) {
            out.extend_from_slice(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses and validates a GPST byte buffer.
pub fn decode_tokens(bytes: &[u8]) -> Result<TokenSet<f32>> {
    let header = GpstHeader::parse(bytes)?;
    if bytes.len() != header.file_len() {
        return Err(Error::CorruptFile(format!(
            "expected {} bytes for {} tokens x {} channels, found {}",
            header.file_len(),
            header.l,
            header.c_f,
            bytes.len()
        )));
    }
    let floats: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let tokens = floats
        .chunks_exact(5 + header.c_f as usize)
        .map(|rec| {
            Token::new(
                GaussianGeom::from_array([rec[0], rec[1], rec[2], rec[3], rec[4]]),
                rec[5..].to_vec(),
            )
        })
        .collect();
    let ts = TokenSet {
        tokens,
        width: header.width,
        height: header.height,
        s: header.s,
    };
    ts.validate().map_err(|e| match e {
        Error::InvariantViolation(_) => e,
        other => Error::InvariantViolation(other.to_string()),
    })?;
    Ok(ts)
}

pub fn write_tokens<T: Scalar>(ts: &TokenSet<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_tokens(ts)?)?;
    Ok(())
}

pub fn read_tokens(path: impl AsRef<Path>) -> Result<TokenSet<f32>> {
    let path = path.as_ref();
    match fs::read(path) {
        Ok(bytes) => decode_tokens(&bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::FileNotFound(path.to_path_buf())),
        Err(e) => Err(e.into()),
    }
}

/// JSON debug form; field names mirror the in-memory types.
pub fn tokens_to_json<T: Scalar + serde::Serialize>(ts: &TokenSet<T>) -> String {
    serde_json::to_string_pretty(ts).expect("token sets always serialize")
}

pub fn tokens_from_json(text: &str) -> Result<TokenSet<f32>> {
    let ts: TokenSet<f32> = serde_json::from_str(text).map_err(|e| Error::CorruptFile(e.to_string()))?;
    ts.validate()?;
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> TokenSet<f32> {
        TokenSet::new(
            vec![Token::new(GaussianGeom::new(1.5, 2.5, -0.25, 3.0, 4.0), vec![0.1, 0.2, 0.3])],
            16,
            8,
            5.0,
        )
        .unwrap()
    }

    #[test]
    fn layout_and_length() {
        let bytes = encode_tokens(&sample()).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 32);
        assert_eq!(bytes.len(), 58);
        assert_eq!(&bytes[0..4], b"GPST");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &16u32.to_le_bytes());
        assert_eq!(&bytes[18..20], &3u16.to_le_bytes());
        assert_eq!(&bytes[20..24], &5.0f32.to_le_bytes());
        assert_eq!(&bytes[24..26], &FLAG_PACKED.to_le_bytes());
        assert_eq!(&bytes[26..30], &1.5f32.to_le_bytes());
        assert_eq!(&bytes[54..58], &0.3f32.to_le_bytes());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.gpst");
        write_tokens(&sample(), &path).unwrap();
        assert_eq!(read_tokens(&path).unwrap(), sample());
        assert!(matches!(read_tokens(dir.path().join("missing.gpst")), Err(Error::FileNotFound(_))));
    }

    #[test]
    fn rejects_corruption() {
        let good = encode_tokens(&sample()).unwrap();

        let mut v2 = good.clone();
        v2[4] = 2;
        assert!(matches!(decode_tokens(&v2), Err(Error::UnsupportedVersion(2))));

        assert!(matches!(decode_tokens(&good[..good.len() - 1]), Err(Error::CorruptFile(_))));
        assert!(matches!(decode_tokens(&good[..10]), Err(Error::CorruptFile(_))));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(decode_tokens(&long), Err(Error::CorruptFile(_))));

        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(matches!(decode_tokens(&magic), Err(Error::CorruptFile(_))));

        let mut rho = good.clone();
        rho[34..38].copy_from_slice(&1.5f32.to_le_bytes());
        assert!(matches!(decode_tokens(&rho), Err(Error::InvariantViolation(_))));

        let mut sigma = good.clone();
        sigma[26..30].copy_from_slice(&(-1.0f32).to_le_bytes());
        assert!(matches!(decode_tokens(&sigma), Err(Error::InvariantViolation(_))));

        let mut zero_l = good;
        zero_l[14..18].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(decode_tokens(&zero_l), Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn empty_set_is_not_storable() {
        let empty = TokenSet::<f32>::new(vec![], 4, 4, 5.0).unwrap();
        assert!(encode_tokens(&empty).is_err());
    }

    #[test]
    fn json_mirrors_field_names() {
        let text = tokens_to_json(&sample());
        for key in ["tokens", "geom", "sigma_x", "sigma_y", "rho", "mu_x", "mu_y", "\"f\"", "width", "height", "\"s\""] {
            assert!(text.contains(key), "missing {key}");
        }
        assert_eq!(tokens_from_json(&text).unwrap(), sample());
    }

    proptest! {
        #[test]
        fn binary_round_trip_is_bitwise(seed in any::<u64>(), l in 1usize..20, c in 1usize..5) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let tokens = (0..l).map(|_| Token::new(
                GaussianGeom::new(rng.gen_range(1e-4f32..40.0), rng.gen_range(1e-4f32..40.0),
                                  rng.gen_range(-0.9999f32..0.9999), rng.gen_range(-10.0f32..50.0),
                                  rng.gen_range(-10.0f32..50.0)),
                (0..c).map(|_| rng.gen::<f32>() * 4.0 - 2.0).collect())).collect();
            let ts = TokenSet::new(tokens, 40, 32, rng.gen_range(0.5f32..8.0)).unwrap();
            let back = decode_tokens(&encode_tokens(&ts).unwrap()).unwrap();
            prop_assert_eq!(encode_tokens(&back).unwrap(), encode_tokens(&ts).unwrap());
            prop_assert_eq!(back, ts);
        }
    }
}
