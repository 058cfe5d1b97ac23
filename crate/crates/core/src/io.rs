//! CSV and little-endian binary serialization of sampled functions and fields.
//!
//! Binary files hold `(re, im)` pairs of `f64`. Each one has a JSON sidecar at
//! `<path>.json` describing the grid, and for fields, the scale grid.

use std::fs;
use std::path::{Path, PathBuf};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LpxError, Result};
use crate::grid::{GridSpec, HalfSpaceField, SampledFunction, ScaleGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_grid: Option<ScaleGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl Sidecar {
    pub fn for_grid(grid: &GridSpec, config_hash: Option<&str>) -> Self {
        Self {
            dim: grid.dim(),
            n: grid.n(),
            half_width: grid.half_width(),
            scales: None,
            scale_grid: None,
            config_hash: config_hash.map(str::to_owned),
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.dim, self.half_width, self.n)
    }

    /// Rejects sidecars whose recorded hash differs from `expected`.
    pub fn check_hash(&self, expected: &str) -> Result<()> {
        match &self.config_hash {
            Some(found) if found != expected => Err(LpxError::HashMismatch {
                expected: expected.to_owned(),
                found: found.clone(),
            }),
            _ => Ok(()),
        }
    }
}

/// Hex SHA-256 of the compact JSON encoding of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    use sha2::{Digest, Sha256};
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(value)?)))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn coord_headers(dim: usize) -> Vec<String> {
    (0..dim).map(|a| format!("x{a}")).collect()
}

pub fn write_csv(f: &SampledFunction, path: &Path) -> Result<()> {
    let grid = f.grid();
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = coord_headers(grid.dim());
    header.push("re".into());
    header.push("im".into());
    w.write_record(&header).map_err(csv_err)?;
    for (idx, v) in f.values().iter().enumerate() {
        let p = grid.point(idx);
        let mut row: Vec<String> = p[..grid.dim()].iter().map(|c| c.to_string()).collect();
        row.push(v.re.to_string());
        row.push(v.im.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> LpxError {
    LpxError::Parse(e.to_string())
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| LpxError::Parse(format!("{s:?}: {e}")))
}

/// Reads a CSV written for `grid`; rows must follow the grid's flat order.
pub fn read_csv(path: &Path, grid: &GridSpec) -> Result<SampledFunction> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let dim = grid.dim();
    let tol = 1e-9 * grid.spacing();
    let mut values = Vec::with_capacity(grid.len());
    for (idx, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != dim + 2 {
            return Err(LpxError::Parse(format!("row {idx}: expected {} columns", dim + 2)));
        }
        if idx >= grid.len() {
            return Err(LpxError::ShapeMismatch { expected: grid.len(), got: idx + 1 });
        }
        let p = grid.point(idx);
        for a in 0..dim {
            if (parse_f64(&rec[a])? - p[a]).abs() > tol {
                return Err(LpxError::Parse(format!("row {idx}: coordinate off the grid")));
            }
        }
        values.push(Complex64::new(parse_f64(&rec[dim])?, parse_f64(&rec[dim + 1])?));
    }
    SampledFunction::new(*grid, values)
}

fn encode(values: &[Complex64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(values.len() * 16);
    for v in values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    bytes
}

fn decode(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if !bytes.len().is_multiple_of(16) {
        return Err(LpxError::Parse("binary length is not a multiple of 16".into()));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

pub fn write_binary(f: &SampledFunction, path: &Path, config_hash: Option<&str>) -> Result<()> {
    fs::write(path, encode(f.values()))?;
    let side = Sidecar::for_grid(f.grid(), config_hash);
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    Ok(serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?)
}

pub fn read_binary(path: &Path) -> Result<(SampledFunction, Sidecar)> {
    let side = read_sidecar(path)?;
    let f = SampledFunction::new(side.grid()?, decode(&fs::read(path)?)?)?;
    Ok((f, side))
}

pub fn write_field_binary(field: &HalfSpaceField, path: &Path, config_hash: Option<&str>) -> Result<()> {
    fs::write(path, encode(field.values()))?;
    let mut side = Sidecar::for_grid(field.grid(), config_hash);
    side.scales = Some(field.scales().scales().to_vec());
    side.scale_grid = Some(field.scales().clone());
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn read_field_binary(path: &Path) -> Result<(HalfSpaceField, Sidecar)> {
    let side = read_sidecar(path)?;
    let scales = side
        .scale_grid
        .clone()
        .ok_or_else(|| LpxError::Parse("field sidecar lacks a scale grid".into()))?;
    let scales = ScaleGrid::new(scales.t_min(), scales.t_max(), scales.steps_per_octave())?;
    let field = HalfSpaceField::new(side.grid()?, scales, decode(&fs::read(path)?)?)?;
    Ok((field, side))
}
