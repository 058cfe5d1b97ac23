//! Norms of the concrete ball quasi-Banach function spaces.
//!
//! A [`SpaceDescriptor`] is plain configuration. [`SpaceDescriptor::resolve`]
//! samples its weights, exponents and ball stencils on a grid, producing a
//! [`ResolvedSpace`] that evaluates norms.

mod luxemburg;
mod orlicz;
mod variable;
mod weights;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use luxemburg::luxemburg;
pub use orlicz::{orlicz_norm, OrliczFunction, OrliczSpec};
pub use variable::{ExponentFunction, ExponentSpec};
pub use weights::{
    ap_characteristic, critical_index, refinement_growth, Weight, WeightSpec, CHARACTERISTIC_CAP,
    GROWTH_TOLERANCE, INDEX_TOLERANCE,
};

use crate::error::{LpxError, Result};
use crate::grid::{GridSpec, SampledFunction};
use crate::maximal::BallFamily;
use crate::stencil::{ball_sums, BallStencil};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfinityTag {
    #[serde(rename = "inf")]
    Inf,
}

/// A mixed-norm axis exponent: a positive number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisExponent {
    Finite(f64),
    Infinite(InfinityTag),
}

impl AxisExponent {
    pub fn value(&self) -> f64 {
        match self {
            AxisExponent::Finite(p) => *p,
            AxisExponent::Infinite(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceDescriptor {
    Lebesgue { p: f64 },
    Weighted { p: f64, weight: WeightSpec },
    /// `sup_B |B|^{1/p - 1/r} ||f||_{L^r(B)}`, `0 < r <= p`.
    Morrey { p: f64, r: f64 },
    /// One exponent per axis; axis 0 is integrated first.
    MixedNorm { p: Vec<AxisExponent> },
    Variable { exponent: ExponentSpec },
    /// Slice radius `t`, outer exponent `r`.
    OrliczSlice { phi: OrliczSpec, r: f64, t: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(LpxError::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl SpaceDescriptor {
    /// Short human-readable name used in reports.
    pub fn label(&self) -> String {
        match self {
            SpaceDescriptor::Lebesgue { p } => format!("L^{p}"),
            SpaceDescriptor::Weighted { p, weight } => format!("L^{p}_w({weight:?})"),
            SpaceDescriptor::Morrey { p, r } => format!("Morrey({p},{r})"),
            SpaceDescriptor::MixedNorm { p } => {
                let ps: Vec<String> = p.iter().map(|a| a.value().to_string()).collect();
                format!("MixedNorm({})", ps.join(","))
            }
            SpaceDescriptor::Variable { exponent } => format!("Variable({exponent:?})"),
            SpaceDescriptor::OrliczSlice { phi, r, t } => format!("OrliczSlice({phi:?},r={r},t={t})"),
        }
    }

    pub fn resolve(&self, grid: &GridSpec) -> Result<ResolvedSpace> {
        let (inner, floor) = match self {
            SpaceDescriptor::Lebesgue { p } => {
                positive("p", *p)?;
                (Inner::Lebesgue { p: *p }, *p)
            }
            SpaceDescriptor::Weighted { p, weight } => {
                positive("p", *p)?;
                let w = weight.weight(grid)?;
                let q = weight.known_critical_index(grid.dim()).unwrap_or(1.0);
                (Inner::Weighted { p: *p, weight: w.values().real_parts() }, p / q)
            }
            SpaceDescriptor::Morrey { p, r } => {
                positive("p", *p)?;
                positive("r", *r)?;
                if r > p {
                    return Err(LpxError::InvalidParameter(format!("Morrey needs r <= p, got r={r} > p={p}")));
                }
                let stencils = BallFamily::dyadic(grid).stencils(grid);
                (Inner::Morrey { p: *p, r: *r, stencils }, *r)
            }
            SpaceDescriptor::MixedNorm { p } => {
                if p.len() != grid.dim() {
                    return Err(LpxError::InvalidParameter(format!(
                        "mixed norm needs {} exponents, got {}",
                        grid.dim(),
                        p.len()
                    )));
                }
                let ps: Vec<f64> = p.iter().map(AxisExponent::value).collect();
                if ps.iter().any(|v| !(*v > 0.0)) {
                    return Err(LpxError::InvalidParameter("mixed-norm exponents must be positive".into()));
                }
                let floor = ps.iter().copied().fold(f64::INFINITY, f64::min);
                (Inner::Mixed { p: ps }, floor)
            }
            SpaceDescriptor::Variable { exponent } => {
                let e = ExponentFunction::new(grid, exponent.sample(grid)?)?;
                let floor = e.min();
                (Inner::Variable { exponent: e }, floor)
            }
            SpaceDescriptor::OrliczSlice { phi, r, t } => {
                positive("r", *r)?;
                positive("t", *t)?;
                let phi = OrliczFunction::new(phi.clone())?;
                let stencil = BallStencil::new(grid, *t);
                let offsets = stencil.offsets(grid);
                let indicator = phi.indicator_norm(stencil.count() as f64 * grid.cell_volume())?;
                let floor = r.min(phi.lower_type());
                (Inner::OrliczSlice { phi, r: *r, offsets, indicator }, floor)
            }
        };
        Ok(ResolvedSpace { descriptor: self.clone(), grid: *grid, floor, inner })
    }
}

#[derive(Debug, Clone)]
enum Inner {
    Lebesgue { p: f64 },
    Weighted { p: f64, weight: Vec<f64> },
    Morrey { p: f64, r: f64, stencils: Vec<BallStencil> },
    Mixed { p: Vec<f64> },
    Variable { exponent: ExponentFunction },
    OrliczSlice { phi: OrliczFunction, r: f64, offsets: Vec<[i64; 2]>, indicator: f64 },
}

/// A descriptor sampled on a grid, ready to evaluate norms.
#[derive(Debug, Clone)]
pub struct ResolvedSpace {
    descriptor: SpaceDescriptor,
    grid: GridSpec,
    floor: f64,
    inner: Inner,
}

fn weighted_power_sum(moduli: &[f64], p: f64, weight: Option<&[f64]>) -> f64 {
    match weight {
        Some(w) => moduli.iter().zip(w).map(|(v, w)| v.powf(p) * w).sum(),
        None => moduli.iter().map(|v| v.powf(p)).sum(),
    }
}

fn axis_norm(values: &[f64], p: f64, h: f64) -> f64 {
    if p.is_infinite() {
        values.iter().copied().fold(0.0, f64::max)
    } else {
        (values.iter().map(|v| v.powf(p)).sum::<f64>() * h).powf(1.0 / p)
    }
}

impl ResolvedSpace {
    pub fn descriptor(&self) -> &SpaceDescriptor {
        &self.descriptor
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Exponent floor of the space: the bound below which its admissible ranges stop.
    pub fn floor_exponent(&self) -> f64 {
        self.floor
    }

    /// The weight values when the space is a weighted Lebesgue space.
    pub fn weight_values(&self) -> Option<(&[f64], f64)> {
        match &self.inner {
            Inner::Weighted { p, weight } => Some((weight, *p)),
            _ => None,
        }
    }

    pub fn norm(&self, f: &SampledFunction) -> Result<f64> {
        if *f.grid() != self.grid {
            return Err(LpxError::GridMismatch);
        }
        let moduli = f.moduli();
        self.norm_of_moduli(&moduli)
    }

    pub(crate) fn norm_of_moduli(&self, moduli: &[f64]) -> Result<f64> {
        let cell = self.grid.cell_volume();
        let value = match &self.inner {
            Inner::Lebesgue { p } => (weighted_power_sum(moduli, *p, None) * cell).powf(1.0 / p),
            Inner::Weighted { p, weight } => (weighted_power_sum(moduli, *p, Some(weight)) * cell).powf(1.0 / p),
            Inner::Morrey { p, r, stencils } => {
                let powered: Vec<f64> = moduli.iter().map(|v| v.powf(*r)).collect();
                let mut best = 0.0f64;
                for st in stencils {
                    let measure = st.count() as f64 * cell;
                    let factor = measure.powf(1.0 / p - 1.0 / r);
                    let top = ball_sums(&self.grid, &powered, st).into_iter().fold(0.0, f64::max);
                    best = best.max(factor * (top.max(0.0) * cell).powf(1.0 / r));
                }
                best
            }
            Inner::Mixed { p } => {
                let n = self.grid.n();
                let h = self.grid.spacing();
                if self.grid.dim() == 1 {
                    axis_norm(moduli, p[0], h)
                } else {
                    let rows: Vec<f64> = moduli.chunks(n).map(|row| axis_norm(row, p[0], h)).collect();
                    axis_norm(&rows, p[1], h)
                }
            }
            Inner::Variable { exponent } => {
                let scale = moduli.iter().copied().fold(0.0, f64::max);
                let ps = exponent.values();
                luxemburg(scale, |l| {
                    moduli
                        .iter()
                        .zip(ps)
                        .map(|(v, p)| if *v == 0.0 { 0.0 } else { (v / l).powf(*p) })
                        .sum::<f64>()
                        * cell
                })?
            }
            Inner::OrliczSlice { phi, r, offsets, indicator } => {
                let grid = self.grid;
                let local: Result<Vec<f64>> = (0..grid.len())
                    .into_par_iter()
                    .map(|x| {
                        let ball: Vec<f64> = offsets.iter().map(|o| moduli[grid.shifted(x, *o)]).collect();
                        Ok((phi.norm_of(&ball, cell)? / indicator).powf(*r))
                    })
                    .collect();
                (local?.iter().sum::<f64>() * cell).powf(1.0 / r)
            }
        };
        if !value.is_finite() {
            return Err(LpxError::NonFinite(0));
        }
        Ok(value)
    }
}

pub fn space_norm(f: &SampledFunction, space: &SpaceDescriptor) -> Result<f64> {
    space.resolve(f.grid())?.norm(f)
}

/// `||f||_{X^p} = || |f|^p ||_X^{1/p}`.
pub fn convexify_norm(f: &SampledFunction, space: &ResolvedSpace, p: f64) -> Result<f64> {
    positive("p", p)?;
    let powered: Vec<f64> = f.values().iter().map(|v| v.norm().powf(p)).collect();
    Ok(space.norm_of_moduli(&powered)?.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::num_complex::Complex64;

    fn line(n: usize) -> GridSpec {
        GridSpec::new(1, 8.0, n).unwrap()
    }

    fn unit_interval(g: GridSpec) -> SampledFunction {
        SampledFunction::from_real_fn(g, |x| if (0.0..=1.0).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn descriptor_json_schema() {
        let d: SpaceDescriptor = serde_json::from_str(r#"{"tag":"morrey","p":2.0,"r":1.0}"#).unwrap();
        assert_eq!(d, SpaceDescriptor::Morrey { p: 2.0, r: 1.0 });
        let m: SpaceDescriptor = serde_json::from_str(r#"{"tag":"mixed_norm","p":[2.0,"inf"]}"#).unwrap();
        assert_eq!(m, SpaceDescriptor::MixedNorm {
            p: vec![AxisExponent::Finite(2.0), AxisExponent::Infinite(InfinityTag::Inf)]
        });
        let w: SpaceDescriptor =
            serde_json::from_str(r#"{"tag":"weighted","p":1.0,"weight":{"kind":"power","a":0.5}}"#).unwrap();
        assert_eq!(w, SpaceDescriptor::Weighted { p: 1.0, weight: WeightSpec::Power { a: 0.5 } });
        assert!(serde_json::from_str::<SpaceDescriptor>(r#"{"tag":"lebesgue","p":2.0,"q":1}"#).is_err());
        assert!(SpaceDescriptor::Morrey { p: 1.0, r: 2.0 }.resolve(&line(64)).is_err());
    }

    #[test]
    fn lebesgue_of_unit_interval() {
        let g = line(1024);
        let v = space_norm(&unit_interval(g), &SpaceDescriptor::Lebesgue { p: 2.0 }).unwrap();
        assert!((v - 1.0).abs() <= 1e-2);
    }

    #[test]
    fn morrey_of_unit_interval_matches_brute_force() {
        let g = line(1024);
        let f = unit_interval(g);
        let got = space_norm(&f, &SpaceDescriptor::Morrey { p: 2.0, r: 1.0 }).unwrap();
        let mods = f.moduli();
        let mut want = 0.0f64;
        for &r in BallFamily::dyadic(&g).radii() {
            for c in 0..g.len() {
                let cells: Vec<usize> = (0..g.len()).filter(|&j| g.periodic_distance(c, j) < r).collect();
                let measure = cells.len() as f64 * g.cell_volume();
                let mass: f64 = cells.iter().map(|&j| mods[j]).sum::<f64>() * g.cell_volume();
                want = want.max(measure.powf(0.5 - 1.0) * mass);
            }
        }
        assert!((got - want).abs() < 1e-12);
        assert!((got - 1.0).abs() <= 0.02);
    }

    #[test]
    fn weighted_power_closed_form() {
        let g = line(1024);
        let d = SpaceDescriptor::Weighted { p: 1.0, weight: WeightSpec::Power { a: 0.5 } };
        let v = space_norm(&unit_interval(g), &d).unwrap();
        assert!((v / (2.0 / 3.0) - 1.0).abs() <= 0.02);
    }

    #[test]
    fn floors() {
        let g = line(64);
        let floor = |d: SpaceDescriptor| d.resolve(&g).unwrap().floor_exponent();
        assert_eq!(floor(SpaceDescriptor::Lebesgue { p: 3.0 }), 3.0);
        assert_eq!(floor(SpaceDescriptor::Weighted { p: 3.0, weight: WeightSpec::Power { a: 0.5 } }), 2.0);
        assert_eq!(floor(SpaceDescriptor::Morrey { p: 3.0, r: 1.5 }), 1.5);
        assert_eq!(floor(SpaceDescriptor::MixedNorm { p: vec![AxisExponent::Finite(1.5)] }), 1.5);
        let v = SpaceDescriptor::Variable {
            exponent: ExponentSpec::Gaussian { p_inf: 2.0, p_center: 1.5, width: 1.0 },
        };
        assert!((floor(v) - 1.5).abs() < 0.01);
        let o = SpaceDescriptor::OrliczSlice { phi: OrliczSpec::PowerLog { p: 1.2 }, r: 2.0, t: 1.0 };
        assert_eq!(floor(o), 1.2);
    }

    #[test]
    fn convexification() {
        let g = line(256);
        let f = SampledFunction::from_real_fn(g, |x| (-x[0] * x[0]).exp()).unwrap();
        let l2 = SpaceDescriptor::Lebesgue { p: 2.0 }.resolve(&g).unwrap();
        let l4 = SpaceDescriptor::Lebesgue { p: 4.0 }.resolve(&g).unwrap();
        assert!((convexify_norm(&f, &l2, 2.0).unwrap() - l4.norm(&f).unwrap()).abs() < 1e-8);
        assert_eq!(convexify_norm(&f, &l2, 1.0).unwrap(), l2.norm(&f).unwrap());
        let ind = unit_interval(g);
        let want = l2.norm(&ind).unwrap().powf(1.0 / 3.0);
        assert!((convexify_norm(&ind, &l2, 3.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn zero_has_zero_norm_everywhere() {
        let g = line(64);
        let z = SampledFunction::zeros(g);
        for d in [
            SpaceDescriptor::Lebesgue { p: 0.5 },
            SpaceDescriptor::Morrey { p: 2.0, r: 1.0 },
            SpaceDescriptor::Variable { exponent: ExponentSpec::Constant { p: 2.0 } },
            SpaceDescriptor::OrliczSlice { phi: OrliczSpec::Power { p: 2.0 }, r: 2.0, t: 1.0 },
        ] {
            assert_eq!(space_norm(&z, &d).unwrap(), 0.0);
        }
        let c = SampledFunction::constant(g, Complex64::new(0.0, 1.0));
        assert!(space_norm(&c, &SpaceDescriptor::Lebesgue { p: 2.0 }).unwrap() > 0.0);
    }
}
