//! Uniform periodic grids over `[-L, L)^n`, logarithmic scale grids, and the
//! sampled objects every operator consumes.
//!
//! Grid points are cell centers `x_i = -L + (i + 1/2) h` with `h = 2L/N`.
//! Flat indices put axis 0 fastest: `idx = i0 + N * i1`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LpxError, Result};

/// Spatial discretization of the periodic box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(LpxError::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(LpxError::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(LpxError::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        Ok(Self { dim, half_width, points_per_axis })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.points_per_axis
    }

    /// Total number of grid points, `N^dim`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Same box, twice the points per axis.
    pub fn refined(&self) -> GridSpec {
        GridSpec { points_per_axis: 2 * self.points_per_axis, ..*self }
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        let n = self.points_per_axis;
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx % n, idx / n]
        }
    }

    pub fn flat_index(&self, mi: [usize; 2]) -> usize {
        if self.dim == 1 {
            mi[0]
        } else {
            mi[0] + self.points_per_axis * mi[1]
        }
    }

    /// Coordinates of a grid point; unused trailing entries are zero.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let mi = self.multi_index(idx);
        let mut p = [0.0; 2];
        for (a, slot) in p.iter_mut().enumerate().take(self.dim) {
            *slot = self.coord(mi[a]);
        }
        p
    }

    /// DFT frequency of bin `k` along one axis, in cycles per unit length.
    pub fn axis_frequency(&self, k: usize) -> f64 {
        let n = self.points_per_axis;
        let period = 2.0 * self.half_width;
        if k < n / 2 {
            k as f64 / period
        } else {
            (k as f64 - n as f64) / period
        }
    }

    pub fn frequency(&self, idx: usize) -> [f64; 2] {
        let mi = self.multi_index(idx);
        let mut xi = [0.0; 2];
        for (a, slot) in xi.iter_mut().enumerate().take(self.dim) {
            *slot = self.axis_frequency(mi[a]);
        }
        xi
    }

    pub fn frequency_norm(&self, idx: usize) -> f64 {
        let xi = self.frequency(idx);
        (xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
    }

    /// Largest representable frequency per axis, `N / (4L)`.
    pub fn nyquist(&self) -> f64 {
        self.points_per_axis as f64 / (4.0 * self.half_width)
    }

    /// Smallest nonzero frequency per axis, `1 / (2L)`.
    pub fn fundamental(&self) -> f64 {
        1.0 / (2.0 * self.half_width)
    }

    /// Signed minimal periodic offset `j - i` along one axis, in `(-N/2, N/2]`.
    pub fn periodic_offset(&self, i: usize, j: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let mut d = (j as i64 - i as i64).rem_euclid(n);
        if d > n / 2 {
            d -= n;
        }
        d
    }

    /// Torus distance between two grid points.
    pub fn periodic_distance(&self, a: usize, b: usize) -> f64 {
        let ma = self.multi_index(a);
        let mb = self.multi_index(b);
        let h = self.spacing();
        let mut s = 0.0;
        for axis in 0..self.dim {
            let d = self.periodic_offset(ma[axis], mb[axis]) as f64 * h;
            s += d * d;
        }
        s.sqrt()
    }

    /// Torus distance between two points of the box.
    pub fn torus_distance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let period = 2.0 * self.half_width;
        let mut s = 0.0;
        for axis in 0..self.dim {
            let d = (a[axis] - b[axis]).rem_euclid(period);
            let d = d.min(period - d);
            s += d * d;
        }
        s.sqrt()
    }

    /// Periodic translate of grid point `idx` by whole cells.
    pub fn shifted(&self, idx: usize, shift: [i64; 2]) -> usize {
        let n = self.points_per_axis as i64;
        let mi = self.multi_index(idx);
        let mut out = [0usize; 2];
        for axis in 0..self.dim {
            out[axis] = (mi[axis] as i64 + shift[axis]).rem_euclid(n) as usize;
        }
        self.flat_index(out)
    }
}

/// Logarithmic scale grid for the measure `dt/t`.
///
/// Node `k` is the log-midpoint of the cell `[t_min 2^{k/J}, t_min 2^{(k+1)/J})`,
/// and every node carries the weight `ln 2 / J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    t_min: f64,
    t_max: f64,
    steps_per_octave: usize,
    scales: Vec<f64>,
    log_weight: f64,
}

impl ScaleGrid {
    pub fn new(t_min: f64, t_max: f64, steps_per_octave: usize) -> Result<Self> {
        if !(t_min.is_finite() && t_min > 0.0 && t_max.is_finite()) {
            return Err(LpxError::InvalidScales(format!("bad range [{t_min}, {t_max}]")));
        }
        if t_max / t_min < 4.0 {
            return Err(LpxError::InvalidScales(format!(
                "t_max / t_min must be >= 4, got {}",
                t_max / t_min
            )));
        }
        if steps_per_octave < 4 {
            return Err(LpxError::InvalidScales(format!(
                "steps per octave must be >= 4, got {steps_per_octave}"
            )));
        }
        let j = steps_per_octave as f64;
        let count = (j * (t_max / t_min).log2()).round() as usize;
        let scales = (0..count)
            .map(|k| t_min * ((k as f64 + 0.5) / j).exp2())
            .collect();
        Ok(Self {
            t_min,
            t_max,
            steps_per_octave,
            scales,
            log_weight: std::f64::consts::LN_2 / j,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps_per_octave(&self) -> usize {
        self.steps_per_octave
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_max
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.scales.iter().position(|&s| s == t)
    }
}

/// A function sampled at the cell centers of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LpxError::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(LpxError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn constant(grid: GridSpec, c: Complex64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|idx| f(&grid.point(idx)[..grid.dim()]))
            .collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// `e^{2 pi i xi . x}` for a frequency on the dual grid.
    pub fn pure_frequency(grid: GridSpec, xi: [f64; 2]) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let x = grid.point(idx);
                let phase = 2.0 * std::f64::consts::PI * (xi[0] * x[0] + xi[1] * x[1]);
                Complex64::from_polar(1.0, phase)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &SampledFunction) -> Result<Self> {
        if self.grid != other.grid {
            return Err(LpxError::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<Self> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Pointwise `g(|f|)`, as a real-valued function.
    pub fn map_modulus(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_real(self.grid, self.values.iter().map(|v| g(v.norm())).collect())
    }

    /// Periodic translation by whole cells: `out(x) = f(x - shift h)`.
    pub fn translated(&self, shift: [i64; 2]) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for (idx, v) in self.values.iter().enumerate() {
            values[self.grid.shifted(idx, shift)] = *v;
        }
        Self { grid: self.grid, values }
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Fraction of the mass of `|f|` lying outside `[-L/2, L/2]^n`.
    pub fn outside_mass_fraction(&self) -> f64 {
        let half = self.grid.half_width() / 2.0;
        let mut total = 0.0;
        let mut outside = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let m = v.norm();
            total += m;
            let p = self.grid.point(idx);
            if p[..self.grid.dim()].iter().any(|c| c.abs() > half) {
                outside += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }

    /// True when at most `1e-6` of the mass sits outside the inner half box.
    pub fn is_concentrated(&self) -> bool {
        self.outside_mass_fraction() <= 1e-6
    }
}

/// Rectangle-rule integral over the periodic box.
pub fn integrate(f: &SampledFunction) -> Complex64 {
    let s: Complex64 = f.values.iter().sum();
    s * f.grid.cell_volume()
}

/// Values `F(y, t_k)` on the product of the spatial grid and a scale grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceField {
    grid: GridSpec,
    scales: ScaleGrid,
    values: Vec<Complex64>,
}

impl HalfSpaceField {
    /// `values` is scale-major: entry `k * N^dim + idx` holds `F(x_idx, t_k)`.
    pub fn new(grid: GridSpec, scales: ScaleGrid, values: Vec<Complex64>) -> Result<Self> {
        let expected = grid.len() * scales.len();
        if values.len() != expected {
            return Err(LpxError::ShapeMismatch { expected, got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(LpxError::NonFinite(i));
        }
        Ok(Self { grid, scales, values })
    }

    pub fn zeros(grid: GridSpec, scales: ScaleGrid) -> Self {
        let len = grid.len() * scales.len();
        Self { grid, scales, values: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn from_fn(grid: GridSpec, scales: ScaleGrid, f: impl Fn(&[f64], f64) -> Complex64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * scales.len());
        for &t in scales.scales() {
            for idx in 0..grid.len() {
                values.push(f(&grid.point(idx)[..grid.dim()], t));
            }
        }
        Self::new(grid, scales, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn scales(&self) -> &ScaleGrid {
        &self.scales
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, idx: usize, k: usize) -> Complex64 {
        self.values[k * self.grid.len() + idx]
    }

    pub fn slice(&self, k: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            scales: self.scales.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Quadrature weight of cell `(y, t_k)` for `dy dt / t^{n+1}`.
    pub fn cell_weight(&self, k: usize) -> f64 {
        self.grid.cell_volume() * self.scales.log_weight() / self.scales.scales()[k].powi(self.grid.dim() as i32)
    }
}

/// Whether [`halfspace_integrate`] integrates `|F|^2` or `|F|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrand {
    #[default]
    Squared,
    Modulus,
}

/// Quadrature of `|F|^2` (or `|F|`) against `dy dt / t^{n+1}` over the masked cells.
pub fn halfspace_integrate(
    field: &HalfSpaceField,
    mask: impl Fn(usize, usize) -> bool,
    integrand: Integrand,
) -> f64 {
    let n = field.grid.len();
    let mut total = 0.0;
    for k in 0..field.scales.len() {
        let w = field.cell_weight(k);
        let mut s = 0.0;
        for idx in 0..n {
            if mask(idx, k) {
                let v = field.values[k * n + idx];
                s += match integrand {
                    Integrand::Squared => v.norm_sqr(),
                    Integrand::Modulus => v.norm(),
                };
            }
        }
        total += w * s;
    }
    total
}
