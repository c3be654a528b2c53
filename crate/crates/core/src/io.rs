//! File formats: plain-text signals and coefficient tables, binary PGM (P5)
//! images with 8- or 16-bit samples, and atomic writes.
//!
//! Text files hold whitespace-separated decimal numbers, one row per line;
//! `#` starts a comment. Numbers are written in shortest round-trip form, so
//! a write followed by a read is the identity.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{FbError, Result};
use crate::signal::{Image2D, Signal1D};

fn io_err(path: &Path, e: impl std::fmt::Display) -> FbError {
    FbError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> FbError {
    FbError::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Parses rows of numbers; blank and comment-only lines are skipped.
pub fn parse_table(text: &str, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let row = body
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        format_err(
                            path,
                            format!("line {}: `{t}` is not a finite number", ln + 1),
                        )
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn format_table(rows: &[&[f64]]) -> String {
    let mut out = String::new();
    for row in rows {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{v:?}").expect("string write");
        }
        out.push('\n');
    }
    out
}

/// A signal file: all numbers in reading order.
pub fn read_signal(path: &Path) -> Result<Signal1D> {
    let rows = parse_table(&read_to_string(path)?, path)?;
    let samples: Vec<f64> = rows.into_iter().flatten().collect();
    Signal1D::new(samples).map_err(|e| format_err(path, e.to_string()))
}

/// One sample per line.
pub fn write_signal(path: &Path, x: &[f64]) -> Result<()> {
    let rows: Vec<&[f64]> = x.chunks(1).collect();
    write_atomic(path, format_table(&rows).as_bytes())
}

/// A `rows × cols` matrix, checked for shape.
pub fn read_matrix(path: &Path, rows: usize, cols: usize) -> Result<Vec<f64>> {
    let table = parse_table(&read_to_string(path)?, path)?;
    if table.len() != rows || table.iter().any(|r| r.len() != cols) {
        return Err(format_err(path, format!("expected a {rows}×{cols} table")));
    }
    Ok(table.concat())
}

pub fn write_matrix(path: &Path, data: &[f64], cols: usize) -> Result<()> {
    let rows: Vec<&[f64]> = data.chunks(cols.max(1)).collect();
    write_atomic(path, format_table(&rows).as_bytes())
}

struct Header {
    width: usize,
    height: usize,
    maxval: u16,
    data_start: usize,
}

fn parse_pgm_header(bytes: &[u8], path: &Path) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(format_err(path, "not a binary PGM (P5) file"));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        // Whitespace and comments between fields.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(path, "truncated PGM header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err(path, "PGM header field out of range"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(format_err(path, "missing whitespace after PGM header"));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(format_err(path, "PGM has zero size"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(
            path,
            format!("PGM maxval {maxval} outside 1..=65535"),
        ));
    }
    Ok(Header {
        width: width as usize,
        height: height as usize,
        maxval: maxval as u16,
        data_start: pos + 1,
    })
}

pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Image2D> {
    let h = parse_pgm_header(bytes, path)?;
    let wide = h.maxval > 255;
    let bps = if wide { 2 } else { 1 };
    let need = h.width * h.height * bps;
    let raster = &bytes[h.data_start..];
    if raster.len() < need {
        return Err(format_err(
            path,
            format!("raster has {} bytes, expected {need}", raster.len()),
        ));
    }
    let pixels: Vec<f64> = if wide {
        raster[..need]
            .chunks_exact(2)
            .map(|b| f64::from(u16::from_be_bytes([b[0], b[1]])))
            .collect()
    } else {
        raster[..need].iter().map(|&b| f64::from(b)).collect()
    };
    if pixels.iter().any(|&v| v > f64::from(h.maxval)) {
        return Err(format_err(path, "sample exceeds maxval"));
    }
    Image2D::new(h.height, h.width, pixels)
        .map(|im| im.with_maxval(h.maxval))
        .map_err(|e| format_err(path, e.to_string()))
}

/// Quantizes with round-half-even and clamps to `[0, maxval]`.
pub fn encode_pgm(im: &Image2D) -> Vec<u8> {
    let maxval = im.maxval.max(1);
    let mut out = format!("P5\n{} {}\n{}\n", im.width(), im.height(), maxval).into_bytes();
    let q = |v: f64| -> u16 {
        if v.is_nan() {
            0
        } else {
            v.round_ties_even().clamp(0.0, f64::from(maxval)) as u16
        }
    };
    if maxval > 255 {
        for &v in im.pixels() {
            out.extend_from_slice(&q(v).to_be_bytes());
        }
    } else {
        out.extend(im.pixels().iter().map(|&v| q(v) as u8));
    }
    out
}

pub fn read_pgm(path: &Path) -> Result<Image2D> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    decode_pgm(&bytes, path)
}

pub fn write_pgm(path: &Path, im: &Image2D) -> Result<()> {
    write_atomic(path, &encode_pgm(im))
}

/// Serializes `value` as pretty JSON and writes it atomically.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn is_pgm_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_8_and_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        for maxval in [255u16, 4095, 65535] {
            let im = Image2D::from_fn(3, 5, |r, c| {
                ((r * 5 + c) * 97 % (maxval as usize + 1)) as f64
            })
            .unwrap()
            .with_maxval(maxval);
            let p = dir.path().join(format!("im{maxval}.pgm"));
            write_pgm(&p, &im).unwrap();
            let back = read_pgm(&p).unwrap();
            assert_eq!(back, im);
        }
    }

    #[test]
    fn pgm_header_comments_and_errors() {
        let p = Path::new("mem.pgm");
        let bytes = b"P5\n# made by hand\n2 1\n# depth\n255\n\x07\xff";
        let im = decode_pgm(bytes, p).unwrap();
        assert_eq!(im.pixels(), &[7.0, 255.0]);
        assert!(matches!(
            decode_pgm(b"P2\n1 1\n255\n0", p),
            Err(FbError::Format { .. })
        ));
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n255\n\x00", p),
            Err(FbError::Format { .. })
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n70000\n\x00\x00", p),
            Err(FbError::Format { .. })
        ));
    }

    #[test]
    fn quantization_rounds_half_even_and_clamps() {
        let im = Image2D::new(1, 6, vec![0.5, 1.5, 2.5, -3.0, 300.0, 254.5]).unwrap();
        let bytes = encode_pgm(&im);
        assert_eq!(&bytes[bytes.len() - 6..], &[0, 2, 2, 0, 255, 254]);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        let x = vec![0.1, -1e-300, 1.0 / 3.0, 12345.678];
        write_signal(&p, &x).unwrap();
        assert_eq!(read_signal(&p).unwrap().samples(), &x[..]);
        let m = dir.path().join("m.txt");
        write_matrix(&m, &x, 2).unwrap();
        assert_eq!(read_matrix(&m, 2, 2).unwrap(), x);
        assert!(read_matrix(&m, 1, 4).is_err());
        std::fs::write(&p, "1 2 # c\n\n3 nan\n").unwrap();
        assert!(matches!(read_signal(&p), Err(FbError::Format { .. })));
    }
}
