//! Portable bitmap codec.
//!
//! Writes the binary `P4` variant; reads `P4` and the ASCII `P1` variant.
//! A white dot of the stimulus is stored as bit 1 (ink), so standard viewers
//! show the dots dark on a light page.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::BinaryImage;

pub fn encode(img: &BinaryImage) -> Vec<u8> {
    let (w, h) = img.dims();
    let row_bytes = w.div_ceil(8);
    let mut out = format!("P4\n{w} {h}\n").into_bytes();
    out.reserve(row_bytes * h);
    for y in 0..h {
        let mut row = vec![0u8; row_bytes];
        for x in 0..w {
            if img.get(x, y) {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<BinaryImage, String> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos).ok_or("missing magic number")?;
    let width = parse_dim(next_token(bytes, &mut pos))?;
    let height = parse_dim(next_token(bytes, &mut pos))?;
    let mut bits = Vec::with_capacity(width * height);
    match magic {
        b"P4" => {
            // Exactly one whitespace byte separates the header from the raster.
            pos += 1;
            let row_bytes = width.div_ceil(8);
            let raster = bytes.get(pos..).unwrap_or_default();
            if raster.len() < row_bytes * height {
                return Err(format!("raster truncated: {} of {} bytes", raster.len(), row_bytes * height));
            }
            for y in 0..height {
                let row = &raster[y * row_bytes..(y + 1) * row_bytes];
                bits.extend((0..width).map(|x| row[x / 8] & (0x80 >> (x % 8)) != 0));
            }
        }
        b"P1" => {
            while bits.len() < width * height {
                skip_space(bytes, &mut pos);
                match bytes.get(pos) {
                    Some(b'0') => bits.push(false),
                    Some(b'1') => bits.push(true),
                    Some(c) => return Err(format!("unexpected byte {c:#04x} in raster")),
                    None => return Err("raster truncated".into()),
                }
                pos += 1;
            }
        }
        other => return Err(format!("unsupported magic {:?}", String::from_utf8_lossy(other))),
    }
    BinaryImage::from_bits(width, height, bits).map_err(|e| e.to_string())
}

pub fn write(path: &Path, img: &BinaryImage) -> Result<()> {
    fs::write(path, encode(img)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<BinaryImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|reason| Error::Bitmap {
        path: path.to_path_buf(),
        reason,
    })
}

fn skip_space(bytes: &[u8], pos: &mut usize) {
    while let Some(&c) = bytes.get(*pos) {
        if c == b'#' {
            while bytes.get(*pos).is_some_and(|&c| c != b'\n') {
                *pos += 1;
            }
        } else if c.is_ascii_whitespace() {
            *pos += 1;
        } else {
            break;
        }
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    skip_space(bytes, pos);
    let start = *pos;
    while bytes.get(*pos).is_some_and(|c| !c.is_ascii_whitespace()) {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}

fn parse_dim(token: Option<&[u8]>) -> std::result::Result<usize, String> {
    let token = token.ok_or("missing dimension")?;
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&d: &usize| d > 0)
        .ok_or_else(|| format!("bad dimension {:?}", String::from_utf8_lossy(token)))
}
