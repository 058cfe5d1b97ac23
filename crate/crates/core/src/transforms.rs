//! Multiscale convolution `phi_t * f` by Fourier multiplication.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{LpxError, Result};
use crate::fft::Spectral;
use crate::grid::{GridSpec, HalfSpaceField, SampledFunction, ScaleGrid};
use crate::kernels::Kernel;

/// Multipliers at or above this level outside the lowest band raise the wrap flag.
pub const WRAP_THRESHOLD: f64 = 1e-8;

/// A kernel paired with a scale grid, with one multiplier table per scale.
#[derive(Debug, Clone)]
pub struct ConvolutionPlan {
    grid: GridSpec,
    kernel: Kernel,
    scales: ScaleGrid,
    multipliers: Vec<Vec<f64>>,
    spectral: Spectral,
    wrap_warning: bool,
}

impl ConvolutionPlan {
    pub fn new(kernel: &Kernel, scales: &ScaleGrid) -> Self {
        let grid = *kernel.grid();
        let multipliers: Vec<Vec<f64>> = scales.scales().par_iter().map(|&t| kernel.multiplier(t)).collect();
        let fundamental = grid.fundamental() * (1.0 + 1e-12);
        let wrap_warning = multipliers.last().is_some_and(|m| {
            (0..grid.len()).any(|i| {
                let xi = grid.frequency(i);
                let lowest = xi[..grid.dim()].iter().all(|c| c.abs() <= fundamental);
                !lowest && m[i].abs() >= WRAP_THRESHOLD
            })
        });
        Self {
            grid,
            kernel: kernel.clone(),
            scales: scales.clone(),
            multipliers,
            spectral: Spectral::new(grid),
            wrap_warning,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn scales(&self) -> &ScaleGrid {
        &self.scales
    }

    /// Set when the largest scale still has spectral mass beyond the lowest nonzero band,
    /// meaning the dilated kernel wraps around the periodic box.
    pub fn wrap_warning(&self) -> bool {
        self.wrap_warning
    }

    /// Cached `phi_hat(t_k xi)` table.
    pub fn multiplier(&self, k: usize) -> &[f64] {
        &self.multipliers[k]
    }

    fn check(&self, f: &SampledFunction) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(LpxError::GridMismatch);
        }
        Ok(())
    }

    pub(crate) fn spectrum(&self, f: &SampledFunction) -> Vec<Complex64> {
        self.spectral.forward(f.values())
    }

    pub(crate) fn apply(&self, spectrum: &[Complex64], multiplier: &[f64]) -> Vec<Complex64> {
        self.spectral.apply(spectrum, multiplier)
    }
}

/// `phi_t * f` for any `t` in `[t_min, t_max]`; grid scales use the cached table.
pub fn convolve_at_scale(f: &SampledFunction, plan: &ConvolutionPlan, t: f64) -> Result<SampledFunction> {
    plan.check(f)?;
    if !plan.scales.contains(t) {
        return Err(LpxError::ScaleOutOfRange { t, t_min: plan.scales.t_min(), t_max: plan.scales.t_max() });
    }
    let spectrum = plan.spectrum(f);
    let values = match plan.scales.index_of(t) {
        Some(k) => plan.apply(&spectrum, &plan.multipliers[k]),
        None => plan.apply(&spectrum, &plan.kernel.multiplier(t)),
    };
    SampledFunction::new(plan.grid, values)
}

/// `F(x, t_k) = phi_{t_k} * f (x)` over the whole scale grid.
pub fn build_field(f: &SampledFunction, plan: &ConvolutionPlan) -> Result<HalfSpaceField> {
    plan.check(f)?;
    let spectrum = plan.spectrum(f);
    let slices: Vec<Vec<Complex64>> = plan
        .multipliers
        .par_iter()
        .map(|m| plan.apply(&spectrum, m))
        .collect();
    HalfSpaceField::new(plan.grid, plan.scales.clone(), slices.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_annular_kernel, build_weak_kernel};
    use std::f64::consts::PI;

    fn setup() -> (GridSpec, ConvolutionPlan) {
        let g = GridSpec::new(1, 8.0, 256).unwrap();
        let s = ScaleGrid::new(1.0 / 16.0, 32.0, 4).unwrap();
        let plan = ConvolutionPlan::new(&build_annular_kernel(g).unwrap(), &s);
        (g, plan)
    }

    fn naive_dft(v: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = v.len();
        (0..n)
            .map(|k| {
                v.iter()
                    .enumerate()
                    .map(|(j, x)| x * Complex64::from_polar(1.0, sign * 2.0 * PI * (j * k) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn pure_frequency_is_diagonal() {
        let (g, plan) = setup();
        let xi = [g.axis_frequency(40), 0.0];
        let f = SampledFunction::pure_frequency(g, xi);
        let t = plan.scales().scales()[12];
        let out = convolve_at_scale(&f, &plan, t).unwrap();
        let m = plan.kernel().eval([t * xi[0], 0.0]);
        for (o, v) in out.values().iter().zip(f.values()) {
            assert!((o - v * m).norm() < 1e-12);
        }
    }

    #[test]
    fn small_scales_annihilate() {
        let g = GridSpec::new(1, 8.0, 256).unwrap();
        let s = ScaleGrid::new(1.0 / 64.0, 1.0, 4).unwrap();
        let plan = ConvolutionPlan::new(&build_annular_kernel(g).unwrap(), &s);
        let f = SampledFunction::from_real_fn(g, |x| (-x[0] * x[0]).exp() * (5.0 * x[0]).cos()).unwrap();
        let t = 0.9 / g.nyquist();
        assert!(convolve_at_scale(&f, &plan, t).unwrap().is_zero());
        assert!(matches!(convolve_at_scale(&f, &plan, 2.0), Err(LpxError::ScaleOutOfRange { .. })));
    }

    #[test]
    fn delta_response_matches_inverse_dft() {
        let (g, plan) = setup();
        let mut v = vec![0.0; g.len()];
        v[0] = 1.0 / g.cell_volume();
        let f = SampledFunction::from_real(g, v.clone()).unwrap();
        let t = 0.5;
        let out = convolve_at_scale(&f, &plan, t).unwrap();
        let spec = naive_dft(&v.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>(), -1.0);
        let prod: Vec<Complex64> = spec.iter().zip(plan.kernel().multiplier(t)).map(|(s, m)| s * m).collect();
        let want = naive_dft(&prod, 1.0);
        for (o, w) in out.values().iter().zip(&want) {
            assert!((o - w / g.len() as f64).norm() < 1e-10);
        }
    }

    #[test]
    fn plancherel_per_scale() {
        let (g, plan) = setup();
        let f = SampledFunction::from_real_fn(g, |x| (-(x[0] - 0.5).powi(2)).exp() * (7.0 * x[0]).sin()).unwrap();
        let field = build_field(&f, &plan).unwrap();
        let spec = naive_dft(f.values(), -1.0);
        let h = g.spacing();
        for k in 0..plan.scales().len() {
            let lhs: f64 = field.slice(k).iter().map(|v| v.norm_sqr()).sum::<f64>() * h;
            let rhs: f64 = spec
                .iter()
                .zip(plan.multiplier(k))
                .map(|(s, m)| (s * m * h).norm_sqr())
                .sum::<f64>()
                / (2.0 * g.half_width());
            // roundoff floor for scales whose band misses the spectrum of f
            let floor = 1e-20 * f.l2_norm().powi(2);
            assert!((lhs - rhs).abs() <= 1e-10 * rhs + floor, "k {k} lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn zero_input_gives_zero_field() {
        let (g, plan) = setup();
        assert!(build_field(&SampledFunction::zeros(g), &plan).unwrap().is_zero());
    }

    #[test]
    fn disjoint_bands_are_orthogonal() {
        let (g, plan) = setup();
        let f = SampledFunction::from_real_fn(g, |x| (-x[0] * x[0] / 2.0).exp() * (3.0 * x[0]).cos()).unwrap();
        let field = build_field(&f, &plan).unwrap();
        // scales a factor 8 apart have disjoint annular supports
        let (a, b) = (4, 4 + 3 * 4);
        let inner: Complex64 = field.slice(a).iter().zip(field.slice(b)).map(|(x, y)| x * y.conj()).sum();
        let scale: f64 = field.slice(a).iter().map(|v| v.norm_sqr()).sum::<f64>().max(1e-300);
        assert!(inner.norm() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn wide_scales_raise_wrap_flag() {
        let (_, plan) = setup();
        assert!(plan.wrap_warning());
        let g = GridSpec::new(1, 8.0, 256).unwrap();
        let s = ScaleGrid::new(1.0 / 16.0, 1.0, 4).unwrap();
        let narrow = ConvolutionPlan::new(&build_weak_kernel(g), &s);
        assert!(narrow.wrap_warning());
        let tiny = ScaleGrid::new(1.0 / 64.0, 1.0 / 16.0, 4).unwrap();
        assert!(!ConvolutionPlan::new(&build_annular_kernel(g).unwrap(), &tiny).wrap_warning());
    }
}
