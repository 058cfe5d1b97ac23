//! Orlicz functions with sampled monotonicity and type checks.

use serde::{Deserialize, Serialize};

use super::luxemburg::luxemburg;
use crate::error::{LpxError, Result};
use crate::grid::SampledFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrliczSpec {
    /// `t^p`.
    Power { p: f64 },
    /// `t^p ln(e + t)`: lower type `p`, upper type `p + 1`.
    PowerLog { p: f64 },
    /// `t^p + t^q` with `p <= q`.
    Mixed { p: f64, q: f64 },
}

/// Largest constant a declared type may need on the sample grid.
pub const TYPE_CONSTANT_CAP: f64 = 1e3;

fn log_grid() -> Vec<f64> {
    (0..64).map(|i| 10f64.powf(-8.0 + 16.0 * i as f64 / 63.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrliczFunction {
    spec: OrliczSpec,
    lower_type: f64,
    upper_type: f64,
    type_constants: (f64, f64),
}

impl OrliczFunction {
    pub fn new(spec: OrliczSpec) -> Result<Self> {
        let (lower, upper) = match spec {
            OrliczSpec::Power { p } => (p, p),
            OrliczSpec::PowerLog { p } => (p, p + 1.0),
            OrliczSpec::Mixed { p, q } => {
                if p > q {
                    return Err(LpxError::InvalidParameter(format!("mixed Orlicz needs p <= q, got {p} > {q}")));
                }
                (p, q)
            }
        };
        if !(lower.is_finite() && lower > 0.0 && upper.is_finite()) {
            return Err(LpxError::InvalidParameter(format!("Orlicz exponents must be positive, got {lower}")));
        }
        let mut phi = Self { spec, lower_type: lower, upper_type: upper, type_constants: (0.0, 0.0) };
        phi.validate()?;
        Ok(phi)
    }

    fn validate(&mut self) -> Result<()> {
        if self.eval(0.0) != 0.0 {
            return Err(LpxError::InvalidParameter("Orlicz function must vanish at 0".into()));
        }
        let ts = log_grid();
        let vals: Vec<f64> = ts.iter().map(|&t| self.eval(t)).collect();
        if vals.iter().any(|v| !(*v > 0.0)) || vals.windows(2).any(|w| w[1] < w[0]) {
            return Err(LpxError::InvalidParameter("Orlicz function must be positive and nondecreasing".into()));
        }
        let mut c_lower = 0.0f64;
        let mut c_upper = 0.0f64;
        for &t in &ts {
            for &s in &ts {
                let ratio = self.eval(s * t) / self.eval(t);
                if !ratio.is_finite() {
                    continue;
                }
                if s < 1.0 {
                    c_lower = c_lower.max(ratio / s.powf(self.lower_type));
                } else {
                    c_upper = c_upper.max(ratio / s.powf(self.upper_type));
                }
            }
        }
        if c_lower > TYPE_CONSTANT_CAP || c_upper > TYPE_CONSTANT_CAP {
            return Err(LpxError::InvalidParameter(format!(
                "declared types need constants ({c_lower}, {c_upper}) above {TYPE_CONSTANT_CAP}"
            )));
        }
        self.type_constants = (c_lower, c_upper);
        Ok(())
    }

    pub fn spec(&self) -> &OrliczSpec {
        &self.spec
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.spec {
            OrliczSpec::Power { p } => t.powf(p),
            OrliczSpec::PowerLog { p } => t.powf(p) * (std::f64::consts::E + t).ln(),
            OrliczSpec::Mixed { p, q } => t.powf(p) + t.powf(q),
        }
    }

    pub fn lower_type(&self) -> f64 {
        self.lower_type
    }

    pub fn upper_type(&self) -> f64 {
        self.upper_type
    }

    /// Measured constants `C` for the lower and upper type bounds on the sample grid.
    pub fn type_constants(&self) -> (f64, f64) {
        self.type_constants
    }

    /// Luxemburg norm of nonnegative samples with cell measure `cell`.
    pub(crate) fn norm_of(&self, moduli: &[f64], cell: f64) -> Result<f64> {
        let scale = moduli.iter().copied().fold(0.0, f64::max);
        luxemburg(scale, |l| moduli.iter().map(|&v| if v == 0.0 { 0.0 } else { self.eval(v / l) }).sum::<f64>() * cell)
    }

    /// `||1_E||_Phi = 1 / Phi^{-1}(1 / |E|)`.
    pub(crate) fn indicator_norm(&self, measure: f64) -> Result<f64> {
        luxemburg(1.0, |l| self.eval(1.0 / l) * measure)
    }
}

pub fn orlicz_norm(f: &SampledFunction, phi: &OrliczFunction) -> Result<f64> {
    phi.norm_of(&f.moduli(), f.grid().cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn rejects_bad_specs() {
        assert!(OrliczFunction::new(OrliczSpec::Power { p: 0.0 }).is_err());
        assert!(OrliczFunction::new(OrliczSpec::Mixed { p: 3.0, q: 2.0 }).is_err());
    }

    #[test]
    fn declared_types_hold() {
        for spec in [
            OrliczSpec::Power { p: 1.5 },
            OrliczSpec::PowerLog { p: 2.0 },
            OrliczSpec::Mixed { p: 1.0, q: 3.0 },
        ] {
            let phi = OrliczFunction::new(spec).unwrap();
            let (a, b) = phi.type_constants();
            assert!(a <= 2.0 && b <= 2.0, "{a} {b}");
        }
    }

    #[test]
    fn power_norm_is_lebesgue() {
        let g = GridSpec::new(1, 4.0, 256).unwrap();
        let f = SampledFunction::from_real_fn(g, |x| (-x[0] * x[0]).exp() * (1.0 + x[0])).unwrap();
        let p = 3.0;
        let lp = (f.moduli().iter().map(|v| v.powf(p)).sum::<f64>() * g.cell_volume()).powf(1.0 / p);
        let phi = OrliczFunction::new(OrliczSpec::Power { p }).unwrap();
        let got = orlicz_norm(&f, &phi).unwrap();
        assert!((got / lp - 1.0).abs() < 1e-6);
        let twice = orlicz_norm(&f.scaled(2.0.into()), &phi).unwrap();
        assert!((twice / got - 2.0).abs() < 1e-6);
    }

    #[test]
    fn indicator_closed_form() {
        // Phi(c / lambda) |E| = 1 solved by an independent bisection on Phi^{-1}
        let g = GridSpec::new(1, 4.0, 64).unwrap();
        let phi = OrliczFunction::new(OrliczSpec::PowerLog { p: 1.5 }).unwrap();
        let c = 3.0;
        let f = SampledFunction::from_real_fn(g, |x| if x[0].abs() < 1.0 { c } else { 0.0 }).unwrap();
        let measure = f.moduli().iter().filter(|v| **v > 0.0).count() as f64 * g.cell_volume();
        let target = 1.0 / measure;
        let (mut lo, mut hi) = (0.0f64, 100.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi.eval(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let want = c / lo;
        let got = orlicz_norm(&f, &phi).unwrap();
        assert!((got / want - 1.0).abs() < 1e-8);
    }
}
