use std::path::Path;

use crate::error::{Error, Result};
use crate::io::atomic::write_atomic;
use crate::synth::TextureImage;

/// Maps `[-1, 1]` to a byte by `round((v + 1) * 127.5)`.
pub fn to_byte(v: f64) -> u8 {
    ((v.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8
}

pub fn from_byte(b: u8) -> f64 {
    b as f64 / 127.5 - 1.0
}

/// Binary P6 encoding with maxval 255.
pub fn encode_ppm(image: &TextureImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.data().iter().map(|&v| to_byte(v)));
    out
}

fn corrupt(detail: &str) -> Error {
    Error::Parse {
        what: "ppm",
        line: 0,
        detail: detail.to_string(),
    }
}

pub fn decode_ppm(bytes: &[u8]) -> Result<TextureImage> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(corrupt("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| corrupt("non-ascii header"))?);
    }
    if fields[0] != "P6" {
        return Err(corrupt("missing P6 magic"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| corrupt("bad header number"));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(corrupt("maxval must be 255"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = width * height * 3;
    let raster = bytes.get(pos..).filter(|r| r.len() == need).ok_or_else(|| corrupt("raster size mismatch"))?;
    TextureImage::new(height, width, raster.iter().map(|&b| from_byte(b)).collect())
}

pub fn write_ppm(path: &Path, image: &TextureImage) -> Result<()> {
    write_atomic(path, &encode_ppm(image))
}

pub fn read_ppm(path: &Path) -> Result<TextureImage> {
    decode_ppm(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_mapping() {
        assert_eq!(to_byte(-1.0), 0);
        assert_eq!(to_byte(1.0), 255);
        assert_eq!(to_byte(0.0), 128);
        for b in 0..=255u8 {
            assert_eq!(to_byte(from_byte(b)), b);
        }
    }

    #[test]
    fn round_trip_is_quantized_identity() {
        let data: Vec<f64> = (0..2 * 3 * 3).map(|i| (i as f64 / 9.0) - 1.0).collect();
        let img = TextureImage::new(2, 3, data).unwrap();
        let bytes = encode_ppm(&img);
        assert!(bytes.starts_with(b"P6\n3 2\n255\n"));
        let back = decode_ppm(&bytes).unwrap();
        assert_eq!(encode_ppm(&back), bytes);
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / 255.0);
        }
    }

    #[test]
    fn rejects_bad_files() {
        assert!(decode_ppm(b"P5\n1 1\n255\n\0").is_err());
        assert!(decode_ppm(b"P6\n2 2\n255\n\0\0\0").is_err());
        assert!(decode_ppm(b"P6\n1").is_err());
    }
}
