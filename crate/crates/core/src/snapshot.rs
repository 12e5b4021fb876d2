//! Binary field snapshots with a JSON sidecar.
//!
//! Layout (little endian): `dim: u32`, `n: u32`, `half_extent: f64`, `kind: u32`, then `n^dim`
//! pairs `(re: f64, im: f64)` in row-major order.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::Value;

use crate::field::{ComplexField, Grid};

pub const KIND_COMPLEX: u32 = 0;

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn encode(u: &ComplexField) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 16 * u.values.len());
    out.extend_from_slice(&(u.grid.dim as u32).to_le_bytes());
    out.extend_from_slice(&(u.grid.n as u32).to_le_bytes());
    out.extend_from_slice(&u.grid.half_extent.to_le_bytes());
    out.extend_from_slice(&KIND_COMPLEX.to_le_bytes());
    for z in &u.values {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> io::Result<ComplexField> {
    if bytes.len() < 20 {
        return Err(invalid("snapshot header truncated"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (dim, n, half, kind) = (u32_at(0) as usize, u32_at(4) as usize, f64_at(8), u32_at(16));
    if kind != KIND_COMPLEX {
        return Err(invalid(format!("unknown snapshot kind {kind}")));
    }
    let grid = Grid::new(dim, half, n).map_err(|e| invalid(e.to_string()))?;
    let len = grid.len();
    if bytes.len() != 20 + 16 * len {
        return Err(invalid(format!("snapshot body has {} bytes, expected {}", bytes.len() - 20, 16 * len)));
    }
    let values = (0..len).map(|i| Complex64::new(f64_at(20 + 16 * i), f64_at(28 + 16 * i))).collect();
    Ok(ComplexField { grid, values })
}

/// Writes the snapshot and its `<path>.json` sidecar.
pub fn write_field(path: &Path, u: &ComplexField, meta: &Value) -> io::Result<()> {
    fs::File::create(path)?.write_all(&encode(u))?;
    let text = serde_json::to_string_pretty(meta).map_err(|e| invalid(e.to_string()))?;
    fs::write(sidecar_path(path), text + "\n")
}

pub fn read_field(path: &Path) -> io::Result<(ComplexField, Value)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let u = decode(&bytes)?;
    let meta = match fs::read_to_string(sidecar_path(path)) {
        Ok(s) => serde_json::from_str(&s).map_err(|e| invalid(e.to_string()))?,
        Err(e) if e.kind() == io::ErrorKind::NotFound => Value::Null,
        Err(e) => return Err(e),
    };
    Ok((u, meta))
}
