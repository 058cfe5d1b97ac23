//! Littlewood-Paley kernels given by their Fourier transforms, Calderon
//! companions, and the truncated reproducing formula.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LpxError, Result};
use crate::fft::Spectral;
use crate::grid::{GridSpec, SampledFunction, ScaleGrid};

/// Minimum value of `sum_k phi_hat psi_hat (t_k xi) ln2/J` accepted by [`reproduce`].
pub const REQUIRED_COVERAGE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `1` on `2 <= |xi| <= 4`, supported in `1 < |xi| < 8`.
    Annular,
    /// Vanishes at the origin and is nonzero along every ray.
    WeakAdmissible,
    /// Nonzero integral; used as the Peetre test kernel.
    Averaging,
}

/// `C^inf` step: 0 for `u <= 0`, 1 for `u >= 1`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

fn annular_profile(r: f64) -> f64 {
    if r <= 1.0 || r >= 8.0 {
        0.0
    } else if r < 2.0 {
        smooth_step(r - 1.0)
    } else if r <= 4.0 {
        1.0
    } else {
        1.0 - smooth_step((r - 4.0) / 4.0)
    }
}

/// Radius where the derivative-of-Gaussian profile peaks.
pub fn weak_profile_peak() -> f64 {
    1.0 / (2.0 * PI)
}

fn weak_profile(r: f64) -> f64 {
    2.0 * PI * r * (0.5 - 2.0 * PI * PI * r * r).exp()
}

/// Plateau `[inner, outer]` with smooth shoulders on `[inner/2, inner]` and `[outer, 2 outer]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnularBump {
    pub inner: f64,
    pub outer: f64,
}

impl AnnularBump {
    pub fn eval(&self, r: f64) -> f64 {
        let half = self.inner / 2.0;
        if r <= half || r >= 2.0 * self.outer {
            0.0
        } else if r < self.inner {
            smooth_step((r - half) / half)
        } else if r <= self.outer {
            1.0
        } else {
            1.0 - smooth_step((r - self.outer) / self.outer)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Profile {
    Annular,
    GaussianDerivative,
    Gaussian,
    Companion { base: Box<Profile>, bump: AnnularBump },
}

impl Profile {
    fn eval(&self, r: f64) -> f64 {
        match self {
            Profile::Annular => annular_profile(r),
            Profile::GaussianDerivative => weak_profile(r),
            Profile::Gaussian => (-PI * r * r).exp(),
            Profile::Companion { base, bump } => base.eval(r) * bump.eval(r),
        }
    }
}

/// A radial convolution kernel represented by `phi_hat` on the dual grid.
#[derive(Debug, Clone)]
pub struct Kernel {
    grid: GridSpec,
    kind: KernelKind,
    radial: bool,
    profile: Profile,
    amplitude: f64,
    fourier_values: Vec<f64>,
    witness_range: Option<(f64, f64)>,
}

impl Kernel {
    fn from_profile(grid: GridSpec, kind: KernelKind, profile: Profile, amplitude: f64) -> Self {
        let mut k = Self {
            grid,
            kind,
            radial: true,
            profile,
            amplitude,
            fourier_values: Vec::new(),
            witness_range: None,
        };
        k.fourier_values = k.multiplier(1.0);
        k
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn is_radial(&self) -> bool {
        self.radial
    }

    pub fn fourier_values(&self) -> &[f64] {
        &self.fourier_values
    }

    /// `phi_hat` at a point of `R^n` given by its norm.
    pub fn eval_radius(&self, r: f64) -> f64 {
        self.amplitude * self.profile.eval(r)
    }

    pub fn eval(&self, xi: [f64; 2]) -> f64 {
        self.eval_radius((xi[0] * xi[0] + xi[1] * xi[1]).sqrt())
    }

    /// `phi_hat(t xi)` at every dual grid frequency.
    pub fn multiplier(&self, t: f64) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.eval_radius(t * self.grid.frequency_norm(i)))
            .collect()
    }

    /// `c * phi`.
    pub fn scaled(&self, c: f64) -> Kernel {
        let mut k = self.clone();
        k.amplitude *= c;
        k.fourier_values = k.multiplier(1.0);
        k
    }

    /// Scale range within which every nonzero dual frequency meets `|phi_hat(t xi)| >= 1e-3`.
    pub fn witness_range(&self) -> Option<(f64, f64)> {
        self.witness_range
    }

    /// True when each nonzero dual frequency has a scale with `|phi_hat(t_k xi)| >= 1e-3`.
    pub fn nondegenerate_on(&self, scales: &ScaleGrid) -> bool {
        (1..self.grid.len()).all(|i| {
            let r = self.grid.frequency_norm(i);
            scales.scales().iter().any(|&t| self.eval_radius(t * r).abs() >= 1e-3)
        })
    }

    /// Spatial kernel: inverse DFT of the Fourier values, scaled to a density.
    pub fn spatial(&self) -> Vec<f64> {
        let spectral = Spectral::new(self.grid);
        let spec: Vec<_> = self
            .fourier_values
            .iter()
            .map(|&v| rustfft::num_complex::Complex64::new(v, 0.0))
            .collect();
        let inv = 1.0 / self.grid.cell_volume();
        spectral.inverse(&spec).iter().map(|v| v.re * inv).collect()
    }
}

/// Builds the kernel of the requested kind on `grid`.
pub fn build_kernel(kind: KernelKind, grid: GridSpec) -> Result<Kernel> {
    match kind {
        KernelKind::Annular => build_annular_kernel(grid),
        KernelKind::WeakAdmissible => Ok(build_weak_kernel(grid)),
        KernelKind::Averaging => Ok(build_gaussian_kernel(grid)),
    }
}

pub fn build_annular_kernel(grid: GridSpec) -> Result<Kernel> {
    if grid.nyquist() < 8.0 {
        return Err(LpxError::DualRangeTooSmall { nyquist: grid.nyquist(), required: 8.0 });
    }
    Ok(Kernel::from_profile(grid, KernelKind::Annular, Profile::Annular, 1.0))
}

/// `phi_hat(xi) = 2 pi |xi| exp(1/2 - 2 pi^2 |xi|^2)`, peak value 1 at `|xi| = 1/(2 pi)`.
pub fn build_weak_kernel(grid: GridSpec) -> Kernel {
    let mut k = Kernel::from_profile(grid, KernelKind::WeakAdmissible, Profile::GaussianDerivative, 1.0);
    let peak = weak_profile_peak();
    let r_max = grid.nyquist() * (grid.dim() as f64).sqrt();
    k.witness_range = Some((peak / r_max, peak / grid.fundamental()));
    k
}

/// `psi_hat(xi) = exp(-pi |xi|^2)`, so `psi_hat(0) = 1`.
pub fn build_gaussian_kernel(grid: GridSpec) -> Kernel {
    Kernel::from_profile(grid, KernelKind::Averaging, Profile::Gaussian, 1.0)
}

#[derive(Debug, Clone)]
pub struct ReproducingPair {
    pub phi: Kernel,
    pub psi: Kernel,
    /// `sum_k phi_hat psi_hat (t_k e_1) ln2/J`.
    pub normalization_check: f64,
}

impl ReproducingPair {
    /// `sum_k phi_hat(t_k xi) psi_hat(t_k xi) ln2/J` at one radius `|xi|`.
    pub fn coverage(&self, radius: f64, scales: &ScaleGrid) -> f64 {
        scales
            .scales()
            .iter()
            .map(|&t| self.phi.eval_radius(t * radius) * self.psi.eval_radius(t * radius))
            .sum::<f64>()
            * scales.log_weight()
    }
}

/// Builds `psi_hat = phi_hat * b / c` with `b` an annular plateau around the
/// band of `phi` and `c` the scale-grid quadrature of `phi_hat^2 b` along `e_1`.
pub fn calderon_companion(phi: &Kernel, scales: &ScaleGrid) -> Result<ReproducingPair> {
    if !phi.radial {
        return Err(LpxError::NotRadial);
    }
    let bump = match phi.profile {
        Profile::Annular => AnnularBump { inner: 1.0, outer: 8.0 },
        _ => {
            let peak = weak_profile_peak();
            AnnularBump { inner: peak / 4.0, outer: 4.0 * peak }
        }
    };
    let c: f64 = scales
        .scales()
        .iter()
        .map(|&r| phi.eval_radius(r).powi(2) * bump.eval(r))
        .sum::<f64>()
        * scales.log_weight();
    if !(c > 1e-6) {
        return Err(LpxError::DegenerateKernel(c));
    }
    let profile = Profile::Companion { base: Box::new(phi.profile.clone()), bump };
    let psi = Kernel::from_profile(phi.grid, phi.kind, profile, phi.amplitude / c);
    let mut pair = ReproducingPair { phi: phi.clone(), psi, normalization_check: 0.0 };
    pair.normalization_check = pair.coverage(1.0, scales);
    Ok(pair)
}

/// Truncated Calderon formula `sum_k f * phi_{t_k} * psi_{t_k} ln2/J`.
pub fn reproduce(f: &SampledFunction, pair: &ReproducingPair, scales: &ScaleGrid) -> Result<SampledFunction> {
    let grid = *f.grid();
    if grid != pair.phi.grid {
        return Err(LpxError::GridMismatch);
    }
    let spectral = Spectral::new(grid);
    let spectrum = spectral.forward(f.values());
    let peak = spectrum.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut multiplier = vec![0.0; grid.len()];
    for (i, m) in multiplier.iter_mut().enumerate() {
        let r = grid.frequency_norm(i);
        *m = pair.coverage(r, scales);
        if peak > 0.0 && spectrum[i].norm() > 1e-12 * peak && *m < REQUIRED_COVERAGE {
            return Err(LpxError::BandCoverage { coverage: *m, required: REQUIRED_COVERAGE, frequency: r });
        }
    }
    SampledFunction::new(grid, spectral.apply(&spectrum, &multiplier))
}

#[derive(Serialize)]
struct KernelMetadata {
    kind: KernelKind,
    radial: bool,
    grid: GridSpec,
}

/// Writes `(frequency coordinates, phi_hat)` rows and a JSON metadata sidecar.
pub fn export_kernel(kernel: &Kernel, csv_path: &Path, meta_path: &Path) -> Result<()> {
    let grid = kernel.grid;
    let mut w = csv::Writer::from_path(csv_path).map_err(|e| LpxError::Parse(e.to_string()))?;
    let mut header: Vec<String> = (0..grid.dim()).map(|a| format!("xi{a}")).collect();
    header.push("value".into());
    w.write_record(&header).map_err(|e| LpxError::Parse(e.to_string()))?;
    for (i, v) in kernel.fourier_values.iter().enumerate() {
        let xi = grid.frequency(i);
        let mut row: Vec<String> = xi[..grid.dim()].iter().map(|c| c.to_string()).collect();
        row.push(v.to_string());
        w.write_record(&row).map_err(|e| LpxError::Parse(e.to_string()))?;
    }
    w.flush()?;
    let meta = KernelMetadata { kind: kernel.kind, radial: kernel.radial, grid };
    std::fs::write(meta_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::num_complex::Complex64;

    fn grid1() -> GridSpec {
        GridSpec::new(1, 8.0, 1024).unwrap()
    }

    #[test]
    fn annular_values() {
        let k = build_annular_kernel(grid1()).unwrap();
        assert_eq!(k.eval([3.0, 0.0]), 1.0);
        assert_eq!(k.eval([0.0, 0.0]), 0.0);
        let v = k.eval_radius(1.5);
        assert!(v > 0.0 && v < 1.0);
        let samples: Vec<f64> = (5..=95).map(|i| k.eval_radius(1.0 + i as f64 / 100.0)).collect();
        assert!(samples.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn annular_invariants_on_dual_grid() {
        let g = GridSpec::new(2, 2.0, 128).unwrap();
        let k = build_annular_kernel(g).unwrap();
        for (i, &v) in k.fourier_values().iter().enumerate() {
            let r = g.frequency_norm(i);
            assert!((0.0..=1.0).contains(&v));
            if (2.0..=4.0).contains(&r) {
                assert_eq!(v, 1.0);
            }
            if r <= 1.0 || r >= 8.0 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn annular_needs_dual_range() {
        let g = GridSpec::new(1, 8.0, 64).unwrap();
        assert!(matches!(build_annular_kernel(g), Err(LpxError::DualRangeTooSmall { .. })));
    }

    #[test]
    fn weak_profile_peak_is_one() {
        let k = build_weak_kernel(grid1());
        assert_eq!(k.eval_radius(0.0), 0.0);
        let p = weak_profile_peak();
        assert!((k.eval_radius(p) - 1.0).abs() < 1e-14);
        let (argmax, _) = (0..100_000)
            .map(|i| i as f64 * 1e-5)
            .map(|r| (r, k.eval_radius(r)))
            .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        assert!((argmax - p).abs() < 2e-5);
        let (lo, hi) = k.witness_range().unwrap();
        let scales = ScaleGrid::new(lo / 2.0, hi * 2.0, 4).unwrap();
        assert!(k.nondegenerate_on(&scales));
    }

    #[test]
    fn spatial_kernels_have_zero_mean() {
        for k in [build_annular_kernel(grid1()).unwrap(), build_weak_kernel(grid1())] {
            let sp = k.spatial();
            let mean: f64 = sp.iter().sum::<f64>();
            let l1: f64 = sp.iter().map(|v| v.abs()).sum();
            assert!(mean.abs() <= 1e-10 * l1);
        }
    }

    fn fine_normalization(pair: &ReproducingPair) -> f64 {
        // independent log-quadrature of the radial product over [1e-3, 1e3]
        let steps = 256 * 20;
        let lo = 1e-3f64.ln();
        let hi = 1e3f64.ln();
        let du = (hi - lo) / steps as f64;
        (0..steps)
            .map(|i| {
                let r = (lo + (i as f64 + 0.5) * du).exp();
                pair.phi.eval_radius(r) * pair.psi.eval_radius(r)
            })
            .sum::<f64>()
            * du
    }

    #[test]
    fn annular_companion_normalizes() {
        let scales = ScaleGrid::new(1.0 / 32.0, 32.0, 8).unwrap();
        let phi = build_annular_kernel(grid1()).unwrap();
        let pair = calderon_companion(&phi, &scales).unwrap();
        assert!((pair.normalization_check - 1.0).abs() <= 1e-3);
        let fine = fine_normalization(&pair);
        assert!((fine - 1.0).abs() <= 1e-3, "fine {fine}");
        let twice = calderon_companion(&phi.scaled(2.0), &scales).unwrap();
        assert!((twice.psi.eval_radius(3.0) - pair.psi.eval_radius(3.0) / 2.0).abs() < 1e-14);
        assert!((twice.normalization_check - pair.normalization_check).abs() < 1e-12);
        for i in 0..phi.grid().len() {
            assert!(pair.phi.fourier_values()[i] * pair.psi.fourier_values()[i] >= 0.0);
        }
    }

    #[test]
    fn degenerate_companion_is_rejected() {
        let scales = ScaleGrid::new(100.0, 1000.0, 4).unwrap();
        let phi = build_annular_kernel(grid1()).unwrap();
        assert!(matches!(calderon_companion(&phi, &scales), Err(LpxError::DegenerateKernel(_))));
    }

    #[test]
    fn reproduces_covered_frequency() {
        let g = grid1();
        let scales = ScaleGrid::new(1.0 / 32.0, 32.0, 4).unwrap();
        let pair = calderon_companion(&build_annular_kernel(g).unwrap(), &scales).unwrap();
        let f = SampledFunction::pure_frequency(g, [3.0, 0.0]);
        let out = reproduce(&f, &pair, &scales).unwrap();
        assert!(out.sub(&f).unwrap().l2_norm() <= 1e-2 * f.l2_norm());
        let zero = SampledFunction::zeros(g);
        assert!(reproduce(&zero, &pair, &scales).unwrap().is_zero());
        let low = SampledFunction::constant(g, Complex64::new(1.0, 0.0));
        assert!(matches!(reproduce(&low, &pair, &scales), Err(LpxError::BandCoverage { .. })));
    }
}
