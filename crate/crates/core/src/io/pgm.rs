//! Netpbm grayscale codec. Reads P2/P5 (8- or 16-bit) and, as a
//! convenience, P3/P6 reduced to the channel average; writes 16-bit P5.

use std::path::Path;

use super::IoError;
use crate::imagery::Frame;

const MAX16: f64 = 65535.0;

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: u32,
    /// Offset of the raster (binary) or of the first sample token (ASCII).
    data_start: usize,
}

fn decode_err(path: &Path, line: Option<usize>, reason: impl Into<String>) -> IoError {
    IoError::Decode {
        file: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn line_of(bytes: &[u8], offset: usize) -> usize {
    1 + bytes[..offset.min(bytes.len())].iter().filter(|&&b| b == b'\n').count()
}

/// Next whitespace-delimited token, skipping `#` comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<(usize, usize)> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    Some((start, *pos))
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header, IoError> {
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'2' | b'3' | b'5' | b'6') {
        return Err(decode_err(path, Some(1), "not a P2/P3/P5/P6 netpbm file"));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for (i, name) in ["width", "height", "maxval"].iter().enumerate() {
        let (a, b) = next_token(bytes, &mut pos).ok_or_else(|| decode_err(path, Some(line_of(bytes, pos)), format!("missing {name}")))?;
        let text = std::str::from_utf8(&bytes[a..b]).unwrap_or("");
        fields[i] = text
            .parse()
            .map_err(|_| decode_err(path, Some(line_of(bytes, a)), format!("invalid {name} '{text}'")))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(decode_err(path, Some(1), format!("empty image {width}x{height}")));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(decode_err(path, Some(line_of(bytes, pos)), format!("maxval {maxval} outside 1..=65535")));
    }
    // Binary rasters start after exactly one whitespace byte.
    let data_start = if matches!(bytes[1], b'5' | b'6') { pos + 1 } else { pos };
    Ok(Header {
        magic: [bytes[0], bytes[1]],
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        data_start,
    })
}

/// Decodes a netpbm image into `[0, 1]` intensities.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Frame, IoError> {
    let h = parse_header(bytes, path)?;
    let channels = if matches!(h.magic[1], b'3' | b'6') { 3 } else { 1 };
    let count = h.width * h.height * channels;
    let maxval = h.maxval as f64;
    let mut samples = Vec::with_capacity(count);
    if matches!(h.magic[1], b'5' | b'6') {
        let wide = h.maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        let data = bytes.get(h.data_start..).unwrap_or(&[]);
        if data.len() < need {
            return Err(decode_err(
                path,
                None,
                format!("raster truncated: {} of {need} bytes", data.len()),
            ));
        }
        for i in 0..count {
            let v = if wide {
                u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as u32
            } else {
                data[i] as u32
            };
            samples.push(v);
        }
    } else {
        let mut pos = h.data_start;
        for i in 0..count {
            let (a, b) = next_token(bytes, &mut pos)
                .ok_or_else(|| decode_err(path, Some(line_of(bytes, pos)), format!("only {i} of {count} samples")))?;
            let text = std::str::from_utf8(&bytes[a..b]).unwrap_or("");
            let v: u32 = text
                .parse()
                .map_err(|_| decode_err(path, Some(line_of(bytes, a)), format!("invalid sample '{text}'")))?;
            samples.push(v);
        }
    }
    if let Some(bad) = samples.iter().position(|&v| v > h.maxval) {
        return Err(decode_err(path, None, format!("sample {} exceeds maxval {}", samples[bad], h.maxval)));
    }
    let pixels: Vec<f64> = if channels == 1 {
        samples.iter().map(|&v| v as f64 / maxval).collect()
    } else {
        samples
            .chunks_exact(3)
            .map(|c| (c[0] + c[1] + c[2]) as f64 / (3.0 * maxval))
            .collect()
    };
    Frame::new(h.width, h.height, pixels).map_err(|e| decode_err(path, None, e.to_string()))
}

pub fn read_pgm(path: &Path) -> Result<Frame, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_pgm(&bytes, path)
}

/// 16-bit binary PGM. Intensities already on a 16-bit level round-trip exactly.
pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", frame.width(), frame.height()).into_bytes();
    out.reserve(frame.pixels().len() * 2);
    for &v in frame.pixels() {
        let k = (v.clamp(0.0, 1.0) * MAX16).round() as u16;
        out.extend_from_slice(&k.to_be_bytes());
    }
    out
}

pub fn write_pgm(path: &Path, frame: &Frame) -> Result<(), IoError> {
    std::fs::write(path, encode_pgm(frame)).map_err(|e| IoError::io(path, e))
}
