//! Matrix file formats: binary QMX1 and header-free CSV.
//!
//! QMX1 layout: magic `QMX1`, `u32` LE rows, `u32` LE cols, then
//! rows×cols `f64` LE values in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{QmmError, Result};
use crate::matrix::Matrix;

pub const QMX1_MAGIC: &[u8; 4] = b"QMX1";
const HEADER_LEN: usize = 12;

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(QmmError::Format(msg.into()))
}

pub fn encode_qmx1(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.data().len());
    out.extend_from_slice(QMX1_MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decode a QMX1 byte buffer. The payload length is validated against the
/// header before anything is allocated.
pub fn decode_qmx1(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < HEADER_LEN {
        return format_err(format!("QMX1 buffer too short: {} bytes", bytes.len()));
    }
    if &bytes[..4] != QMX1_MAGIC {
        return format_err("bad QMX1 magic");
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload = &bytes[HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| QmmError::Format(format!("QMX1 shape {rows}x{cols} overflows")))?;
    if payload.len() != expected {
        return format_err(format!(
            "QMX1 payload has {} bytes, header {rows}x{cols} needs {expected}",
            payload.len()
        ));
    }
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::new(rows, cols, data)
}

pub fn write_qmx1(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    fs::write(path, encode_qmx1(m))?;
    Ok(())
}

pub fn read_qmx1(path: impl AsRef<Path>) -> Result<Matrix> {
    decode_qmx1(&fs::read(path)?)
}

/// Render as comma-separated decimals, one matrix row per line. Values use
/// the shortest representation that round-trips exactly.
pub fn encode_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Parse header-free CSV. Blank lines are skipped; every row must have the
/// same number of fields.
pub fn decode_csv(text: &str) -> Result<Matrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0usize;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                QmmError::Format(format!("line {}: bad number {:?}", lineno + 1, field))
            })?;
            data.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return format_err(format!("line {}: {count} fields, expected {c}", lineno + 1))
            }
            _ => {}
        }
        rows += 1;
    }
    Matrix::new(rows, cols.unwrap_or(0), data)
}

pub fn write_csv(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    fs::write(path, encode_csv(m))?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    decode_csv(&fs::read_to_string(path)?)
}

/// Load a matrix choosing the codec by file extension (`.csv` or QMX1).
pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_csv(path),
        _ => read_qmx1(path),
    }
}
