//! Tent functional `A^(alpha)` and the square functions `S`, `g`, `g_lambda^*`.
//!
//! Cone and weight sums are taken directly over grid cells rather than through
//! prefix sums, so pointwise comparisons between operators stay exact up to
//! summation order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LpxError, Result};
use crate::grid::{GridSpec, HalfSpaceField, SampledFunction};
use crate::stencil::BallStencil;
use crate::transforms::{build_field, ConvolutionPlan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LPParams {
    pub aperture: f64,
    pub lambda: f64,
    pub peetre_b: f64,
}

impl LPParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.aperture >= 0.0 && self.aperture.is_finite()) {
            return Err(LpxError::InvalidParameter(format!("aperture must be >= 0, got {}", self.aperture)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(LpxError::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.peetre_b > 0.0 && self.peetre_b.is_finite()) {
            return Err(LpxError::InvalidParameter(format!("b must be positive, got {}", self.peetre_b)));
        }
        Ok(())
    }
}

/// Whether `lambda` lies in the range `lambda > max{1, 2/floor}` where the
/// `g_lambda^*` characterization is known to hold. Outside it the operator is
/// still computable; callers may report a warning.
pub fn lambda_in_equivalence_range(lambda: f64, floor_exponent: f64) -> bool {
    lambda > 1f64.max(2.0 / floor_exponent)
}

fn squared_moduli(field: &HalfSpaceField, k: usize) -> Vec<f64> {
    field.slice(k).iter().map(|v| v.norm_sqr()).collect()
}

fn check_aperture(alpha: f64) -> Result<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(LpxError::InvalidParameter(format!("aperture must be >= 0, got {alpha}")))
    }
}

/// `A^(alpha)(F)(x) = [sum over cells with |x - y| < alpha t_k of |F|^2 dy dt / t^{n+1}]^{1/2}`.
pub fn tent_functional(field: &HalfSpaceField, alpha: f64) -> Result<SampledFunction> {
    check_aperture(alpha)?;
    let grid = *field.grid();
    let scales = field.scales().scales();
    let mut total = vec![0.0f64; grid.len()];
    if alpha > 0.0 {
        for (k, &t) in scales.iter().enumerate() {
            let sq = squared_moduli(field, k);
            if sq.iter().all(|v| *v == 0.0) {
                continue;
            }
            let offsets = BallStencil::new(&grid, alpha * t).offsets(&grid);
            let w = field.cell_weight(k);
            let sums: Vec<f64> = (0..grid.len())
                .into_par_iter()
                .map(|x| offsets.iter().map(|o| sq[grid.shifted(x, *o)]).sum::<f64>())
                .collect();
            for (acc, s) in total.iter_mut().zip(sums) {
                *acc += w * s;
            }
        }
    }
    SampledFunction::from_real(grid, total.into_iter().map(f64::sqrt).collect())
}

/// Lusin area function `S(f) = A^(1)(phi_t * f)`.
pub fn lusin_area(f: &SampledFunction, plan: &ConvolutionPlan) -> Result<SampledFunction> {
    tent_functional(&build_field(f, plan)?, 1.0)
}

/// `g(f)(x) = [sum_k |phi_{t_k} * f(x)|^2 ln2/J]^{1/2}`.
pub fn g_function(f: &SampledFunction, plan: &ConvolutionPlan) -> Result<SampledFunction> {
    let field = build_field(f, plan)?;
    let lw = field.scales().log_weight();
    let grid = *f.grid();
    let mut total = vec![0.0f64; grid.len()];
    for k in 0..field.scales().len() {
        for (acc, v) in total.iter_mut().zip(field.slice(k)) {
            *acc += v.norm_sqr() * lw;
        }
    }
    SampledFunction::from_real(grid, total.into_iter().map(f64::sqrt).collect())
}

/// Every cell offset of the periodic box with its torus length.
fn box_offsets(grid: &GridSpec) -> Vec<([i64; 2], f64)> {
    let half = (grid.n() / 2) as i64;
    let h = grid.spacing();
    let range: Vec<i64> = (-half + 1..=half).collect();
    let rows: Vec<i64> = if grid.dim() == 1 { vec![0] } else { range.clone() };
    let mut out = Vec::with_capacity(grid.len());
    for &dy in &rows {
        for &dx in &range {
            out.push(([dx, dy], h * ((dx * dx + dy * dy) as f64).sqrt()));
        }
    }
    out
}

/// `g_lambda^*(f)(x)` with integrand `|phi_t * f(y)|^2` and weight
/// `(t / (t + |x - y|))^{lambda n}` summed over the whole box.
pub fn g_lambda_star(f: &SampledFunction, plan: &ConvolutionPlan, lambda: f64) -> Result<SampledFunction> {
    if !(lambda > 1.0) {
        return Err(LpxError::LambdaTooSmall(lambda));
    }
    let field = build_field(f, plan)?;
    g_lambda_star_field(&field, lambda)
}

pub(crate) fn g_lambda_star_field(field: &HalfSpaceField, lambda: f64) -> Result<SampledFunction> {
    let grid = *field.grid();
    let exponent = lambda * grid.dim() as f64;
    let offsets = box_offsets(&grid);
    let mut total = vec![0.0f64; grid.len()];
    for (k, &t) in field.scales().scales().iter().enumerate() {
        let sq = squared_moduli(field, k);
        if sq.iter().all(|v| *v == 0.0) {
            continue;
        }
        let weights: Vec<f64> = offsets.iter().map(|(_, len)| (t / (t + len)).powf(exponent)).collect();
        let w = field.cell_weight(k);
        let sums: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|x| {
                offsets
                    .iter()
                    .zip(&weights)
                    .map(|((o, _), wt)| wt * sq[grid.shifted(x, *o)])
                    .sum::<f64>()
            })
            .collect();
        for (acc, s) in total.iter_mut().zip(sums) {
            *acc += w * s;
        }
    }
    SampledFunction::from_real(grid, total.into_iter().map(f64::sqrt).collect())
}
