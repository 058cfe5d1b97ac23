//! Forward and inverse DFTs over a grid, 1-D or 2-D.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

/// Cached transforms for one grid. The inverse is normalized by `1 / N^dim`.
#[derive(Clone)]
pub(crate) struct Spectral {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = data[i * n + j];
        }
    }
    out
}

impl Spectral {
    pub(crate) fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, data: &mut Vec<Complex64>) {
        plan.process(data);
        if self.grid.dim() == 2 {
            let n = self.grid.n();
            let mut t = transpose(data, n);
            plan.process(&mut t);
            *data = transpose(&t, n);
        }
    }

    pub(crate) fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut data = values.to_vec();
        self.run(&self.forward, &mut data);
        data
    }

    pub(crate) fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut data = spectrum.to_vec();
        self.run(&self.inverse, &mut data);
        let scale = 1.0 / data.len() as f64;
        for v in &mut data {
            *v *= scale;
        }
        data
    }

    /// Inverse transform of `spectrum * multiplier`.
    pub(crate) fn apply(&self, spectrum: &[Complex64], multiplier: &[f64]) -> Vec<Complex64> {
        let product: Vec<Complex64> = spectrum.iter().zip(multiplier).map(|(s, m)| s * m).collect();
        self.inverse(&product)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let g = GridSpec::new(2, 1.0, 8).unwrap();
        let s = Spectral::new(g);
        let v: Vec<Complex64> = (0..g.len()).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let back = s.inverse(&s.forward(&v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn character_lands_in_its_bin() {
        let g = GridSpec::new(2, 1.0, 8).unwrap();
        let xi = [g.axis_frequency(3), g.axis_frequency(6)];
        let f = crate::grid::SampledFunction::pure_frequency(g, xi);
        let spec = Spectral::new(g).forward(f.values());
        let peak = g.flat_index([3, 6]);
        for (i, v) in spec.iter().enumerate() {
            if i == peak {
                assert!((v.norm() - g.len() as f64).abs() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9);
            }
        }
    }
}
