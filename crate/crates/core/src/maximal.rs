//! Hardy-Littlewood, powered and Peetre-type maximal operators.
//!
//! Every ball average uses the counted measure: the number of cells whose
//! centers lie in the ball times the cell volume.

use rayon::prelude::*;

use crate::error::{LpxError, Result};
use crate::grid::{GridSpec, SampledFunction};
use crate::spaces::ResolvedSpace;
use crate::stencil::{ball_maxima, ball_sums, BallStencil};
use crate::transforms::{build_field, ConvolutionPlan};

/// Balls `B(x, r)` centered at every grid point, for a finite list of radii.
#[derive(Debug, Clone, PartialEq)]
pub struct BallFamily {
    radii: Vec<f64>,
}

impl BallFamily {
    /// Radii `2L 2^{-m}` for `m = 0..=log2 N`: from the full box down to one cell.
    pub fn dyadic(grid: &GridSpec) -> Self {
        let levels = grid.n().trailing_zeros() as i32;
        let radii = (0..=levels)
            .map(|m| 2.0 * grid.half_width() * 2f64.powi(-m))
            .collect();
        Self { radii }
    }

    /// Radii `(k + 1/2) h`, `k = 0..=N/2`: every centered odd-length interval in 1-D.
    pub fn odd_intervals(grid: &GridSpec) -> Self {
        let h = grid.spacing();
        let radii = (0..=grid.n() / 2).map(|k| (k as f64 + 0.5) * h).collect();
        Self { radii }
    }

    pub fn with_radii(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(LpxError::InvalidParameter("ball radii must be positive and finite".into()));
        }
        Ok(Self { radii })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub(crate) fn stencils(&self, grid: &GridSpec) -> Vec<BallStencil> {
        self.radii.iter().map(|&r| BallStencil::new(grid, r)).collect()
    }

    /// Grid cells of `B(center, radius)`.
    pub fn members(grid: &GridSpec, center: usize, radius: f64) -> Vec<usize> {
        BallStencil::new(grid, radius)
            .offsets(grid)
            .into_iter()
            .map(|o| grid.shifted(center, o))
            .collect()
    }

    /// Counted measure of `B(x, radius)`.
    pub fn measure(grid: &GridSpec, radius: f64) -> f64 {
        BallStencil::new(grid, radius).count() as f64 * grid.cell_volume()
    }
}

/// Averages of `values` over `B(x, r)` for every center `x`.
pub(crate) fn ball_averages(grid: &GridSpec, values: &[f64], stencil: &BallStencil) -> Vec<f64> {
    let count = stencil.count() as f64;
    ball_sums(grid, values, stencil).into_iter().map(|s| (s / count).max(0.0)).collect()
}

fn maximal_of(grid: &GridSpec, nonneg: &[f64], balls: &BallFamily) -> Vec<f64> {
    let mut out = vec![0.0f64; grid.len()];
    for st in balls.stencils(grid) {
        let avg = ball_averages(grid, nonneg, &st);
        // B(c, r) contains x exactly when c lies in B(x, r)
        let best = ball_maxima(grid, &avg, &st);
        for (o, b) in out.iter_mut().zip(best) {
            *o = o.max(b);
        }
    }
    out
}

/// `M f(x) = max over family balls containing x of the average of |f|`.
pub fn hl_maximal(f: &SampledFunction, balls: &BallFamily) -> SampledFunction {
    let grid = *f.grid();
    SampledFunction::from_real(grid, maximal_of(&grid, &f.moduli(), balls)).expect("finite averages")
}

/// `M^(theta) f = [M(|f|^theta)]^{1/theta}`.
pub fn powered_maximal(f: &SampledFunction, theta: f64, balls: &BallFamily) -> Result<SampledFunction> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(LpxError::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    let grid = *f.grid();
    let powered: Vec<f64> = f.values().iter().map(|v| v.norm().powf(theta)).collect();
    let m = maximal_of(&grid, &powered, balls);
    SampledFunction::from_real(grid, m.into_iter().map(|v| v.powf(1.0 / theta)).collect())
}

/// `b = 2 (n / floor + 1)`.
pub fn default_peetre_b(dim: usize, floor_exponent: f64) -> f64 {
    2.0 * (dim as f64 / floor_exponent + 1.0)
}

/// Grid offsets `y` with `|y| <= L`, sorted by length.
fn peetre_offsets(grid: &GridSpec) -> Vec<([i64; 2], f64)> {
    let half = (grid.n() / 2) as i64;
    let h = grid.spacing();
    let range: Vec<i64> = (-half + 1..=half).collect();
    let mut out = Vec::new();
    let rows: Vec<i64> = if grid.dim() == 1 { vec![0] } else { range.clone() };
    for &dy in &rows {
        for &dx in &range {
            let len = h * ((dx * dx + dy * dy) as f64).sqrt();
            if len <= grid.half_width() * (1.0 + 1e-12) {
                out.push(([dx, dy], len));
            }
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}

/// `sup_{k, |y| <= L} |psi_{t_k} * f (x - y)| / (1 + |y|/t_k)^b`.
pub fn peetre_maximal(f: &SampledFunction, plan: &ConvolutionPlan, b: f64) -> Result<SampledFunction> {
    if !(b.is_finite() && b > 0.0) {
        return Err(LpxError::InvalidParameter(format!("b must be positive, got {b}")));
    }
    let grid = *f.grid();
    let field = build_field(f, plan)?;
    let offsets = peetre_offsets(&grid);
    let scales = plan.scales().scales();
    let moduli: Vec<Vec<f64>> = (0..scales.len())
        .map(|k| field.slice(k).iter().map(|v| v.norm()).collect())
        .collect();
    let peaks: Vec<f64> = moduli.iter().map(|m| m.iter().copied().fold(0.0, f64::max)).collect();
    let weights: Vec<Vec<f64>> = scales
        .iter()
        .map(|&t| offsets.iter().map(|(_, len)| (1.0 + len / t).powf(-b)).collect())
        .collect();
    let out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            let mut best = 0.0f64;
            for k in 0..scales.len() {
                let m = &moduli[k];
                for (j, (off, _)) in offsets.iter().enumerate() {
                    let w = weights[k][j];
                    // weights only shrink along the sorted offsets
                    if peaks[k] * w <= best {
                        break;
                    }
                    let src = grid.shifted(x, [-off[0], -off[1]]);
                    best = best.max(m[src] * w);
                }
            }
            best
        })
        .collect();
    SampledFunction::from_real(grid, out)
}

/// `||M_b**(f, psi)||_X` for a test kernel with `psi_hat(0) != 0`.
pub fn hardy_norm(f: &SampledFunction, space: &ResolvedSpace, plan: &ConvolutionPlan, b: f64) -> Result<f64> {
    if plan.kernel().eval_radius(0.0) == 0.0 {
        return Err(LpxError::InvalidParameter("the Peetre kernel needs a nonzero integral".into()));
    }
    space.norm(&peetre_maximal(f, plan, b)?)
}

/// `||(sum_j [M^(theta) f_j]^s)^{1/s}||_X / ||(sum_j |f_j|^s)^{1/s}||_X`.
pub fn fs_vector_check(
    fs: &[SampledFunction],
    theta: f64,
    s: f64,
    space: &ResolvedSpace,
    balls: &BallFamily,
) -> Result<f64> {
    if !(theta > 0.0 && s > 0.0 && theta <= s && theta < space.floor_exponent()) {
        return Err(LpxError::InvalidParameter(format!(
            "(theta, s) = ({theta}, {s}) outside the admissible range for floor {}",
            space.floor_exponent()
        )));
    }
    let first = fs.first().ok_or(LpxError::ZeroDenominator)?;
    let grid = *first.grid();
    let mut num = vec![0.0; grid.len()];
    let mut den = vec![0.0; grid.len()];
    for f in fs {
        if *f.grid() != grid {
            return Err(LpxError::GridMismatch);
        }
        let m = powered_maximal(f, theta, balls)?;
        for i in 0..grid.len() {
            num[i] += m.values()[i].re.powf(s);
            den[i] += f.values()[i].norm().powf(s);
        }
    }
    let root = |v: Vec<f64>| SampledFunction::from_real(grid, v.into_iter().map(|x| x.powf(1.0 / s)).collect());
    let d = space.norm(&root(den)?)?;
    if d == 0.0 {
        return Err(LpxError::ZeroDenominator);
    }
    Ok(space.norm(&root(num)?)? / d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::build_gaussian_kernel;
    use crate::grid::ScaleGrid;
    use crate::spaces::SpaceDescriptor;
    use rustfft::num_complex::Complex64;

    fn naive_maximal(f: &SampledFunction, balls: &BallFamily) -> Vec<f64> {
        let g = f.grid();
        let mods = f.moduli();
        let mut out = vec![0.0f64; g.len()];
        for &r in balls.radii() {
            for c in 0..g.len() {
                let m = BallFamily::members(g, c, r);
                let avg = m.iter().map(|&j| mods[j]).sum::<f64>() / m.len() as f64;
                for j in m {
                    out[j] = out[j].max(avg);
                }
            }
        }
        out
    }

    #[test]
    fn constant_is_fixed() {
        let g = GridSpec::new(2, 1.0, 16).unwrap();
        let f = SampledFunction::constant(g, Complex64::new(0.0, -0.7));
        let m = hl_maximal(&f, &BallFamily::dyadic(&g));
        assert!(m.values().iter().all(|v| (v.re - 0.7).abs() < 1e-12));
        let p = powered_maximal(&f, 2.5, &BallFamily::dyadic(&g)).unwrap();
        assert!(p.values().iter().all(|v| (v.re - 0.7).abs() < 1e-12));
    }

    #[test]
    fn matches_naive_family_sup() {
        let g = GridSpec::new(2, 1.0, 16).unwrap();
        let f = SampledFunction::from_real_fn(g, |x| (5.0 * x[0]).sin() + x[1] * x[1]).unwrap();
        for balls in [BallFamily::dyadic(&g), BallFamily::odd_intervals(&g)] {
            let fast = hl_maximal(&f, &balls);
            for (a, b) in fast.values().iter().zip(naive_maximal(&f, &balls)) {
                assert!((a.re - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dominates_one_cell_average() {
        let g = GridSpec::new(1, 4.0, 64).unwrap();
        let f = SampledFunction::from_real_fn(g, |x| x[0].cos() * x[0]).unwrap();
        let m = hl_maximal(&f, &BallFamily::dyadic(&g));
        for (mv, fv) in m.values().iter().zip(f.values()) {
            assert!(mv.re >= fv.norm());
        }
    }

    #[test]
    fn peetre_of_constant_is_psi_hat_zero() {
        let g = GridSpec::new(1, 4.0, 64).unwrap();
        let s = ScaleGrid::new(0.25, 2.0, 4).unwrap();
        let plan = ConvolutionPlan::new(&build_gaussian_kernel(g), &s);
        let f = SampledFunction::constant(g, Complex64::new(1.0, 0.0));
        let m = peetre_maximal(&f, &plan, 3.0).unwrap();
        assert!(m.values().iter().all(|v| (v.re - 1.0).abs() < 1e-12));
    }

    #[test]
    fn peetre_of_character() {
        let g = GridSpec::new(2, 4.0, 32).unwrap();
        let s = ScaleGrid::new(0.25, 2.0, 4).unwrap();
        let psi = build_gaussian_kernel(g);
        let plan = ConvolutionPlan::new(&psi, &s);
        let xi = [g.axis_frequency(2), g.axis_frequency(1)];
        let f = SampledFunction::pure_frequency(g, xi);
        let want = s.scales().iter().map(|&t| psi.eval([t * xi[0], t * xi[1]])).fold(0.0, f64::max);
        let m = peetre_maximal(&f, &plan, 2.0).unwrap();
        assert!(m.values().iter().all(|v| (v.re - want).abs() < 1e-12));
        let m4 = peetre_maximal(&f, &plan, 4.0).unwrap();
        assert!(m.values().iter().zip(m4.values()).all(|(a, b)| b.re <= a.re + 1e-15));
    }

    #[test]
    fn fs_ratio_is_one_for_constants_and_duplication_invariant() {
        let g = GridSpec::new(1, 4.0, 64).unwrap();
        let l2 = SpaceDescriptor::Lebesgue { p: 2.0 }.resolve(&g).unwrap();
        let balls = BallFamily::dyadic(&g);
        let c = SampledFunction::constant(g, Complex64::new(2.0, 0.0));
        let r = fs_vector_check(std::slice::from_ref(&c), 1.0, 1.0, &l2, &balls).unwrap();
        assert!((r - 1.0).abs() < 1e-2);
        let fam: Vec<_> = (0..3)
            .map(|j| SampledFunction::from_real_fn(g, |x| (-(x[0] - j as f64 * 0.5).powi(2) * 4.0).exp()).unwrap())
            .collect();
        let once = fs_vector_check(&fam, 1.0, 2.0, &l2, &balls).unwrap();
        let doubled: Vec<_> = fam.iter().chain(fam.iter()).cloned().collect();
        let twice = fs_vector_check(&doubled, 1.0, 2.0, &l2, &balls).unwrap();
        assert!((once - twice).abs() < 1e-10 * once);
        let zero = SampledFunction::zeros(g);
        assert!(matches!(
            fs_vector_check(&[zero], 1.0, 2.0, &l2, &balls),
            Err(LpxError::ZeroDenominator)
        ));
    }
}
