//! Variable exponents `p(x)` and their log-Hoelder constant.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{LpxError, Result};
use crate::grid::GridSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExponentSpec {
    Constant { p: f64 },
    /// `p_inf + (p_center - p_inf) exp(-|x|^2 / width^2)`.
    Gaussian { p_inf: f64, p_center: f64, width: f64 },
    /// Real parts of a sampled-function CSV.
    File { path: PathBuf },
}

impl ExponentSpec {
    pub fn sample(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        match self {
            ExponentSpec::Constant { p } => Ok(vec![*p; grid.len()]),
            ExponentSpec::Gaussian { p_inf, p_center, width } => {
                if !(*width > 0.0) {
                    return Err(LpxError::InvalidParameter("exponent width must be positive".into()));
                }
                Ok((0..grid.len())
                    .map(|i| {
                        let x = grid.point(i);
                        let r2 = x[0] * x[0] + x[1] * x[1];
                        p_inf + (p_center - p_inf) * (-r2 / (width * width)).exp()
                    })
                    .collect())
            }
            ExponentSpec::File { path } => Ok(crate::io::read_csv(path, grid)?.real_parts()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFunction {
    values: Vec<f64>,
    min: f64,
    max: f64,
    log_holder_constant: f64,
}

impl ExponentFunction {
    pub fn new(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LpxError::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(min > 0.0 && max.is_finite()) {
            return Err(LpxError::InvalidParameter(format!("exponent range [{min}, {max}] not in (0, inf)")));
        }
        let mut c = 0.0f64;
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                let d = grid.periodic_distance(i, j);
                let ratio = (values[i] - values[j]).abs() * (std::f64::consts::E + 1.0 / d).ln();
                c = c.max(ratio);
            }
        }
        Ok(Self { values, min, max, log_holder_constant: c })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// Smallest `C` with `|p(x) - p(y)| <= C / log(e + 1/|x - y|)` over all grid pairs.
    pub fn log_holder_constant(&self) -> f64 {
        self.log_holder_constant
    }
}
