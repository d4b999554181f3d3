use std::path::Path;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::rendering::{Image, Rgb};

/// 8-bit value of a channel: round-half-up of `255 · clamp(c, 0, 1)`.
pub fn quantize(c: f64) -> u8 {
    let v = if c.is_nan() { 0.0 } else { c.clamp(0.0, 1.0) };
    (255.0 * v + 0.5).floor() as u8
}

/// Binary PPM (`P6`, maxval 255).
pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.reserve(img.pixels().len() * 3);
    for c in img.pixels() {
        out.extend([quantize(c.r), quantize(c.g), quantize(c.b)]);
    }
    out
}

pub fn write_ppm(path: &Path, img: &Image) -> Result<()> {
    write_atomic(path, &encode_ppm(img))
}

/// Color PFM: little-endian `f32` triples, bottom row first.
pub fn encode_pfm(img: &Image) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let mut out = format!("PF\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 12);
    for y in (0..h).rev() {
        for x in 0..w {
            for v in img.get(x, y).to_array() {
                out.extend((v as f32).to_le_bytes());
            }
        }
    }
    out
}

pub fn write_pfm(path: &Path, img: &Image) -> Result<()> {
    write_atomic(path, &encode_pfm(img))
}

fn parse_err(message: impl Into<String>) -> Error {
    Error::Parse {
        location: "pfm header".into(),
        message: message.into(),
    }
}

/// Reads `PF` (color) and `Pf` (grayscale, expanded to gray RGB) files in
/// either byte order.
pub fn decode_pfm(bytes: &[u8]) -> Result<Image> {
    // Header: three whitespace-separated tokens after the magic, then a
    // single whitespace byte before the data.
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err("truncated header"));
        }
        tokens.push(
            std::str::from_utf8(&bytes[start..pos]).map_err(|_| parse_err("non-ASCII header"))?,
        );
    }
    pos += 1;
    let channels = match tokens[0] {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(parse_err(format!("bad magic {other:?}"))),
    };
    let dim = |s: &str| {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| parse_err(format!("bad dimension {s:?}")))
    };
    let (w, h) = (dim(tokens[1])?, dim(tokens[2])?);
    let scale: f64 = tokens[3]
        .parse()
        .map_err(|_| parse_err(format!("bad scale {:?}", tokens[3])))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(parse_err("scale must be non-zero"));
    }
    let little = scale < 0.0;
    let need = w * h * channels * 4;
    let data = bytes.get(pos..).unwrap_or(&[]);
    if data.len() != need {
        return Err(Error::Parse {
            location: "pfm data".into(),
            message: format!("expected {need} bytes, found {}", data.len()),
        });
    }
    let vals: Vec<f64> = data
        .chunks_exact(4)
        .map(|b| {
            let b = [b[0], b[1], b[2], b[3]];
            (if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }) as f64
        })
        .collect();
    let mut img = Image::new(w, h, Rgb::BLACK)?;
    for (row, y) in (0..h).rev().enumerate() {
        for x in 0..w {
            let i = (row * w + x) * channels;
            let c = if channels == 3 {
                Rgb::new(vals[i], vals[i + 1], vals[i + 2])
            } else {
                Rgb::gray(vals[i])
            };
            img.set(x, y, c);
        }
    }
    Ok(img)
}

pub fn read_pfm(path: &Path) -> Result<Image> {
    decode_pfm(&std::fs::read(path)?)
}
