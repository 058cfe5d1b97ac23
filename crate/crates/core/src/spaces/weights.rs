//! Muckenhoupt weights: sampled characteristics and the critical index.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{LpxError, Result};
use crate::grid::{GridSpec, SampledFunction};
use crate::maximal::{ball_averages, BallFamily};
use crate::stencil::ball_maxima;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Unit,
    /// `|x|^a`.
    Power { a: f64 },
    /// `(1 + |x|)^a`.
    ShiftedPower { a: f64 },
    /// Real parts of a sampled-function CSV.
    File { path: PathBuf },
}

impl WeightSpec {
    pub fn sample(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        let radial = |g: &dyn Fn(f64) -> f64| -> Vec<f64> {
            (0..grid.len())
                .map(|i| {
                    let x = grid.point(i);
                    g((x[0] * x[0] + x[1] * x[1]).sqrt())
                })
                .collect()
        };
        match self {
            WeightSpec::Unit => Ok(vec![1.0; grid.len()]),
            WeightSpec::Power { a } => Ok(radial(&|r| r.powf(*a))),
            WeightSpec::ShiftedPower { a } => Ok(radial(&|r| (1.0 + r).powf(*a))),
            WeightSpec::File { path } => Ok(crate::io::read_csv(path, grid)?.real_parts()),
        }
    }

    /// Closed-form critical index for the parametric families, `None` for files.
    ///
    /// `|x|^a` and `(1 + |x|)^a` lie in `A_1` for `-n < a <= 0` and have
    /// `q = 1 + a/n` for `a > 0`.
    pub fn known_critical_index(&self, dim: usize) -> Option<f64> {
        match self {
            WeightSpec::Unit => Some(1.0),
            WeightSpec::Power { a } | WeightSpec::ShiftedPower { a } => Some(1.0 + a.max(0.0) / dim as f64),
            WeightSpec::File { .. } => None,
        }
    }

    pub fn weight(&self, grid: &GridSpec) -> Result<Weight> {
        Weight::new(
            SampledFunction::from_real(*grid, self.sample(grid)?)?,
            BallFamily::dyadic(grid),
        )
    }
}

/// A positive weight together with the ball family its characteristic uses.
#[derive(Debug, Clone)]
pub struct Weight {
    values: SampledFunction,
    family: BallFamily,
}

impl Weight {
    pub fn new(values: SampledFunction, family: BallFamily) -> Result<Self> {
        if values.values().iter().any(|v| !(v.re > 0.0) || v.im != 0.0) {
            return Err(LpxError::InvalidParameter("weights must be real and positive".into()));
        }
        Ok(Self { values, family })
    }

    pub fn values(&self) -> &SampledFunction {
        &self.values
    }

    pub fn family(&self) -> &BallFamily {
        &self.family
    }
}

/// `max_B [avg_B w] [avg_B w^{1/(1-p)}]^{p-1}`, or `[avg_B w] max_B w^{-1}` at `p = 1`.
pub fn ap_characteristic(w: &Weight, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(LpxError::InvalidParameter(format!("A_p needs p >= 1, got {p}")));
    }
    let grid = *w.values.grid();
    let vals = w.values.real_parts();
    let dual: Vec<f64> = if p == 1.0 {
        vals.iter().map(|v| 1.0 / v).collect()
    } else {
        vals.iter().map(|v| v.powf(1.0 / (1.0 - p))).collect()
    };
    let mut best = 0.0f64;
    for st in w.family.stencils(&grid) {
        let avg = ball_averages(&grid, &vals, &st);
        let other = if p == 1.0 {
            ball_maxima(&grid, &dual, &st)
        } else {
            ball_averages(&grid, &dual, &st).into_iter().map(|v| v.powf(p - 1.0)).collect()
        };
        for (a, b) in avg.iter().zip(&other) {
            best = best.max(a * b);
        }
    }
    Ok(best)
}

/// Largest characteristic accepted as finite.
pub const CHARACTERISTIC_CAP: f64 = 1e6;
/// Largest `log2` growth of the characteristic under one refinement counted as stable.
pub const GROWTH_TOLERANCE: f64 = 0.05;
/// Bisection stops once the bracket on `q` is this narrow.
pub const INDEX_TOLERANCE: f64 = 0.05;
pub const MAX_INDEX: f64 = 64.0;

/// `log2(char_{2N} / char_N)` for the weight sampled on `grid` and its refinement.
pub fn refinement_growth(spec: &WeightSpec, grid: &GridSpec, p: f64) -> Result<(f64, f64)> {
    let coarse = ap_characteristic(&spec.weight(grid)?, p)?;
    let fine = ap_characteristic(&spec.weight(&grid.refined())?, p)?;
    Ok(((fine / coarse).log2(), fine))
}

/// Smallest `q` whose characteristic is stable under one refinement and below the cap.
pub fn critical_index(spec: &WeightSpec, grid: &GridSpec) -> Result<f64> {
    if matches!(spec, WeightSpec::File { .. }) {
        return Err(LpxError::InvalidParameter("critical index needs a weight that can be resampled".into()));
    }
    let stable = |q: f64| -> Result<bool> {
        let (growth, value) = refinement_growth(spec, grid, q)?;
        Ok(growth <= GROWTH_TOLERANCE && value < CHARACTERISTIC_CAP)
    };
    if stable(1.0)? {
        return Ok(1.0);
    }
    if !stable(MAX_INDEX)? {
        return Err(LpxError::NotInAInfty);
    }
    let (mut lo, mut hi) = (1.0, MAX_INDEX);
    while hi - lo > INDEX_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if stable(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(1, 8.0, 1024).unwrap()
    }

    #[test]
    fn unit_weight_is_exactly_one() {
        let g = GridSpec::new(2, 1.0, 16).unwrap();
        let w = WeightSpec::Unit.weight(&g).unwrap();
        for p in [1.0, 1.5, 2.0, 7.0] {
            assert_eq!(ap_characteristic(&w, p).unwrap(), 1.0);
        }
    }

    #[test]
    fn characteristic_is_nonincreasing_in_p() {
        let w = WeightSpec::Power { a: 0.5 }.weight(&grid()).unwrap();
        let ps = [1.0, 1.2, 1.5, 2.0, 3.0, 5.0];
        let c: Vec<f64> = ps.iter().map(|&p| ap_characteristic(&w, p).unwrap()).collect();
        assert!(c.windows(2).all(|x| x[1] <= x[0] * (1.0 + 1e-12)), "{c:?}");
    }

    #[test]
    fn rejects_nonpositive_weights() {
        let g = GridSpec::new(1, 1.0, 8).unwrap();
        let f = SampledFunction::from_real(g, vec![0.0; 8]).unwrap();
        assert!(Weight::new(f, BallFamily::dyadic(&g)).is_err());
    }

    #[test]
    fn critical_indices_of_power_weights() {
        let g = grid();
        assert_eq!(critical_index(&WeightSpec::Unit, &g).unwrap(), 1.0);
        let q = critical_index(&WeightSpec::Power { a: 0.5 }, &g).unwrap();
        assert!((q - 1.5).abs() <= 0.1, "q = {q}");
        let q1 = critical_index(&WeightSpec::ShiftedPower { a: -0.5 }, &g).unwrap();
        assert!((q1 - 1.0).abs() <= 0.1, "q = {q1}");
    }

    #[test]
    fn power_weight_stability_and_blow_up() {
        let g = grid();
        let spec = WeightSpec::Power { a: 0.5 };
        let (growth2, _) = refinement_growth(&spec, &g, 2.0).unwrap();
        assert!(2f64.powf(growth2.abs()) <= 1.1);
        // below q = 1.5 the characteristic grows like N^{1.5 - p} per refinement
        let (growth12, _) = refinement_growth(&spec, &g, 1.2).unwrap();
        assert!(growth12 >= 0.2, "growth {growth12}");
    }

    #[test]
    fn known_indices() {
        assert_eq!(WeightSpec::Power { a: 0.5 }.known_critical_index(1), Some(1.5));
        assert_eq!(WeightSpec::ShiftedPower { a: -0.5 }.known_critical_index(1), Some(1.0));
    }
}
