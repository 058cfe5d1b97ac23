//! Tent atoms, the level-set decomposition of half-space fields, molecule
//! synthesis, and atom/molecule checkers.
//!
//! The decomposition thresholds `A^(1)(F)` at powers of two. Each nonzero cell
//! `(y, t)` goes to the highest level `k` whose set `O_k = {A > 2^k}` contains
//! the whole ball `B(y, t)`, and within that level to the connected component
//! of `O_k` holding `y`. Every such region is then covered by the tent of one
//! ball, and regions whose cells fit inside a larger ball's tent are merged.

use std::collections::BTreeMap;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{LpxError, Result};
use crate::fft::Spectral;
use crate::grid::{GridSpec, HalfSpaceField, SampledFunction, ScaleGrid};
use crate::kernels::Kernel;
use crate::maximal::BallFamily;
use crate::spaces::ResolvedSpace;
use crate::squarefuncs::tent_functional;
use crate::stencil::{ball_maxima, BallStencil};

/// Relative tolerance for vanishing moments.
pub const MOMENT_TOLERANCE: f64 = 1e-6;
/// Exponents at which decomposed atoms are size-checked.
pub const SIZE_EXPONENTS: [f64; 2] = [2.0, 4.0];

const SIZE_SLACK: f64 = 1e-12;

/// A Euclidean ball on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Ball {
    pub fn new(center: [f64; 2], radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn contains(&self, grid: &GridSpec, idx: usize) -> bool {
        grid.torus_distance(grid.point(idx), self.center) < self.radius
    }

    /// Whether the cell `(y, t)` lies in the tent `{t < r, |y - c| < r - t}`.
    pub fn tent_contains(&self, grid: &GridSpec, idx: usize, t: f64) -> bool {
        t < self.radius && grid.torus_distance(grid.point(idx), self.center) < self.radius - t
    }

    /// Counted measure of the grid cells in the ball.
    pub fn measure(&self, grid: &GridSpec) -> f64 {
        (0..grid.len()).filter(|&i| self.contains(grid, i)).count() as f64 * grid.cell_volume()
    }

    pub fn indicator(&self, grid: &GridSpec) -> SampledFunction {
        let values = (0..grid.len())
            .map(|i| Complex64::new(if self.contains(grid, i) { 1.0 } else { 0.0 }, 0.0))
            .collect();
        SampledFunction::new(*grid, values).expect("indicator values are finite")
    }

    pub fn dilated(&self, factor: f64) -> Ball {
        Ball { center: self.center, radius: self.radius * factor }
    }
}

#[derive(Debug, Clone)]
pub struct TentAtom {
    pub field: HalfSpaceField,
    pub ball: Ball,
    pub coefficient: f64,
}

#[derive(Debug, Clone)]
pub struct TentDecomposition {
    pub atoms: Vec<TentAtom>,
    pub residual: HalfSpaceField,
}

/// One line of the decomposition report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomSummary {
    pub center: [f64; 2],
    pub radius: f64,
    pub coefficient: f64,
    /// `min_p (bound_p - ||A||_{T^p}) / bound_p` over the checked exponents.
    pub size_slack: f64,
}

/// `||A^(1)(F)||_{L^p}` for nonnegative tent values `a`.
fn lp_norm(a: &[f64], p: f64, cell: f64) -> f64 {
    (a.iter().map(|v| v.powf(p)).sum::<f64>() * cell).powf(1.0 / p)
}

/// `|B|^{1/p} / ||1_B||_X`.
fn size_bound(ball: &Ball, space: &ResolvedSpace, p: f64) -> Result<f64> {
    let grid = space.grid();
    Ok(ball.measure(grid).powf(1.0 / p) / space.norm(&ball.indicator(grid))?)
}

/// Smallest relative slack of the `T^p` size condition over [`SIZE_EXPONENTS`].
pub fn atom_size_slack(field: &HalfSpaceField, ball: &Ball, space: &ResolvedSpace) -> Result<f64> {
    let a = tent_functional(field, 1.0)?.real_parts();
    let cell = field.grid().cell_volume();
    let mut slack = f64::INFINITY;
    for p in SIZE_EXPONENTS {
        let bound = size_bound(ball, space, p)?;
        slack = slack.min((bound - lp_norm(&a, p, cell)) / bound);
    }
    Ok(slack)
}

impl TentAtom {
    pub fn passes_size_check(&self, space: &ResolvedSpace) -> Result<bool> {
        Ok(atom_size_slack(&self.field, &self.ball, space)? >= -SIZE_SLACK)
    }

    pub fn in_tent(&self) -> bool {
        let grid = *self.field.grid();
        let scales = self.field.scales().scales().to_vec();
        scales.iter().enumerate().all(|(k, &t)| {
            self.field
                .slice(k)
                .iter()
                .enumerate()
                .all(|(i, v)| *v == Complex64::new(0.0, 0.0) || self.ball.tent_contains(&grid, i, t))
        })
    }
}

impl TentDecomposition {
    /// `sum_j lambda_j A_j`.
    pub fn reconstruct(&self) -> HalfSpaceField {
        let mut values = self.residual.values().to_vec();
        for atom in &self.atoms {
            for (acc, v) in values.iter_mut().zip(atom.field.values()) {
                *acc += v * atom.coefficient;
            }
        }
        HalfSpaceField::new(*self.residual.grid(), self.residual.scales().clone(), values)
            .expect("reconstruction keeps the shape")
    }

    pub fn summaries(&self, space: &ResolvedSpace) -> Result<Vec<AtomSummary>> {
        self.atoms
            .iter()
            .map(|a| {
                Ok(AtomSummary {
                    center: a.ball.center,
                    radius: a.ball.radius,
                    coefficient: a.coefficient,
                    size_slack: atom_size_slack(&a.field, &a.ball, space)?,
                })
            })
            .collect()
    }
}

/// `||(sum_j (lambda_j / ||1_{B_j}||_X)^s 1_{B_j})^{1/s}||_X`.
pub fn coefficient_functional(decomposition: &TentDecomposition, space: &ResolvedSpace, s: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(LpxError::InvalidParameter(format!("s must be positive, got {s}")));
    }
    let grid = *space.grid();
    let mut total = vec![0.0f64; grid.len()];
    for atom in &decomposition.atoms {
        let indicator = atom.ball.indicator(&grid);
        let weight = (atom.coefficient / space.norm(&indicator)?).powf(s);
        for (acc, v) in total.iter_mut().zip(indicator.values()) {
            *acc += weight * v.re;
        }
    }
    let moduli: Vec<f64> = total.into_iter().map(|v| v.powf(1.0 / s)).collect();
    space.norm(&SampledFunction::from_real(grid, moduli)?)
}

/// Connected components of `{values > threshold}` under axis neighbours.
fn components(grid: &GridSpec, values: &[f64], threshold: f64) -> Vec<Option<usize>> {
    let mut label: Vec<Option<usize>> = vec![None; grid.len()];
    let mut next = 0;
    let mut stack = Vec::new();
    let steps: Vec<[i64; 2]> = if grid.dim() == 1 {
        vec![[1, 0], [-1, 0]]
    } else {
        vec![[1, 0], [-1, 0], [0, 1], [0, -1]]
    };
    for start in 0..grid.len() {
        if label[start].is_some() || !(values[start] > threshold) {
            continue;
        }
        label[start] = Some(next);
        stack.push(start);
        while let Some(i) = stack.pop() {
            for s in &steps {
                let j = grid.shifted(i, *s);
                if label[j].is_none() && values[j] > threshold {
                    label[j] = Some(next);
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    label
}

/// Cells `(idx, k)` of one region.
struct Region {
    cells: Vec<(usize, usize)>,
    candidates: Vec<usize>,
}

/// Smallest dyadic ball centered at a candidate whose tent holds every cell.
fn covering_ball(grid: &GridSpec, scales: &[f64], region: &Region, family: &BallFamily) -> Ball {
    let mut tallest: BTreeMap<usize, f64> = BTreeMap::new();
    for &(i, k) in &region.cells {
        let e = tallest.entry(i).or_insert(0.0);
        *e = e.max(scales[k]);
    }
    let column: Vec<([f64; 2], f64)> = tallest.iter().map(|(&i, &t)| (grid.point(i), t)).collect();
    let (need, center) = region
        .candidates
        .par_iter()
        .map(|&c| {
            let pc = grid.point(c);
            let need = column.iter().map(|(y, t)| grid.torus_distance(*y, pc) + t).fold(0.0, f64::max);
            (need, c)
        })
        .reduce(|| (f64::INFINITY, usize::MAX), |a, b| if (b.0, b.1) < (a.0, a.1) { b } else { a });
    let radius = family
        .radii()
        .iter()
        .copied()
        .filter(|&r| r > need)
        .fold(f64::INFINITY, f64::min);
    let radius = if radius.is_finite() { radius } else { need * (1.0 + 1e-9) };
    Ball::new(grid.point(center), radius)
}

/// Level-set atomic decomposition of a tent-space field.
pub fn tent_decompose(field: &HalfSpaceField, space: &ResolvedSpace) -> Result<TentDecomposition> {
    let grid = *field.grid();
    if *space.grid() != grid {
        return Err(LpxError::GridMismatch);
    }
    let scales = field.scales().scales().to_vec();
    let zero = HalfSpaceField::zeros(grid, field.scales().clone());
    let area = tent_functional(field, 1.0)?.real_parts();
    let positive_min = area.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    if !positive_min.is_finite() {
        return Ok(TentDecomposition { atoms: Vec::new(), residual: zero });
    }
    let k_min = positive_min.log2().floor() as i32 - 1;

    // level of each nonzero cell: highest k with B(y, t) inside O_k
    let negated: Vec<f64> = area.iter().map(|v| -v).collect();
    let mut assigned: BTreeMap<i32, Vec<(usize, usize)>> = BTreeMap::new();
    for (k, &t) in scales.iter().enumerate() {
        let slice = field.slice(k);
        if slice.iter().all(|v| v.norm_sqr() == 0.0) {
            continue;
        }
        let ball_min: Vec<f64> = ball_maxima(&grid, &negated, &BallStencil::new(&grid, t))
            .into_iter()
            .map(|v| -v)
            .collect();
        for (i, v) in slice.iter().enumerate() {
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let m = ball_min[i];
            let mut level = (m.log2().ceil() as i32 - 1).max(k_min);
            while 2f64.powi(level + 1) < m {
                level += 1;
            }
            while level > k_min && 2f64.powi(level) >= m {
                level -= 1;
            }
            assigned.entry(level).or_default().push((i, k));
        }
    }

    // split each level by the components of O_k
    let mut regions: Vec<Region> = Vec::new();
    for (&level, cells) in &assigned {
        let labels = components(&grid, &area, 2f64.powi(level));
        let mut by_label: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for &(i, k) in cells {
            let l = labels[i].expect("a cell's own point lies in its level set");
            by_label.entry(l).or_default().push((i, k));
        }
        for (l, cells) in by_label {
            let candidates = (0..grid.len()).filter(|&i| labels[i] == Some(l)).collect();
            regions.push(Region { cells, candidates });
        }
    }

    let family = BallFamily::dyadic(&grid);
    let mut covered: Vec<(Ball, Vec<(usize, usize)>)> = regions
        .iter()
        .map(|r| (covering_ball(&grid, &scales, r, &family), r.cells.clone()))
        .collect();
    covered.sort_by(|a, b| b.0.radius.total_cmp(&a.0.radius));
    let mut kept: Vec<(Ball, Vec<(usize, usize)>)> = Vec::new();
    for (ball, cells) in covered {
        let host = kept
            .iter()
            .position(|(b, _)| cells.iter().all(|&(i, k)| b.tent_contains(&grid, i, scales[k])));
        match host {
            Some(h) => kept[h].1.extend(cells),
            None => kept.push((ball, cells)),
        }
    }

    let cell = grid.cell_volume();
    let len = grid.len();
    let mut atoms = Vec::with_capacity(kept.len());
    for (ball, cells) in kept {
        let mut values = vec![Complex64::new(0.0, 0.0); field.values().len()];
        for &(i, k) in &cells {
            values[k * len + i] = field.get(i, k);
        }
        let piece = HalfSpaceField::new(grid, field.scales().clone(), values)?;
        let a = tent_functional(&piece, 1.0)?.real_parts();
        let mut coefficient = 0.0f64;
        for p in SIZE_EXPONENTS {
            coefficient = coefficient.max(lp_norm(&a, p, cell) / size_bound(&ball, space, p)?);
        }
        let atom_field = piece.scaled(Complex64::new(1.0 / coefficient, 0.0));
        atoms.push(TentAtom { field: atom_field, ball, coefficient });
    }
    Ok(TentDecomposition { atoms, residual: zero })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoleculeParams {
    pub q: f64,
    pub d: usize,
    pub epsilon: f64,
}

impl MoleculeParams {
    /// `q = 2`, `d = 0` and the smallest admissible decay `n(1/theta - 1/q) + 0.01`.
    pub fn default_for(dim: usize, floor_exponent: f64) -> Self {
        let theta = floor_exponent.min(1.0);
        let q = 2.0;
        Self { q, d: 0, epsilon: (dim as f64 * (1.0 / theta - 1.0 / q)).max(0.0) + 0.01 }
    }
}

#[derive(Debug, Clone)]
pub struct Molecule {
    /// Synthesis of the normalized atom.
    pub func: SampledFunction,
    pub ball: Ball,
    pub coefficient: f64,
    pub params: MoleculeParams,
}

impl Molecule {
    /// `lambda` times the synthesized function.
    pub fn weighted(&self) -> SampledFunction {
        self.func.scaled(Complex64::new(self.coefficient, 0.0))
    }
}

/// `sum_k sum_y A(y, t_k) psi_{t_k}(x - y) dy ln2/J`, evaluated through the FFT.
pub fn synthesize_molecule(
    atom: &TentAtom,
    psi: &Kernel,
    scales: &ScaleGrid,
    params: MoleculeParams,
) -> Result<Molecule> {
    let grid = *atom.field.grid();
    if *psi.grid() != grid {
        return Err(LpxError::GridMismatch);
    }
    if atom.field.scales() != scales {
        return Err(LpxError::InvalidScales("atom and synthesis scales differ".into()));
    }
    let spectral = Spectral::new(grid);
    let lw = scales.log_weight();
    let mut total = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (k, &t) in scales.scales().iter().enumerate() {
        let slice = atom.field.slice(k);
        if slice.iter().all(|v| v.norm_sqr() == 0.0) {
            continue;
        }
        let spectrum = spectral.forward(slice);
        for ((acc, s), m) in total.iter_mut().zip(&spectrum).zip(psi.multiplier(t)) {
            *acc += s * (m * lw);
        }
    }
    let func = SampledFunction::new(grid, spectral.inverse(&total))?;
    Ok(Molecule { func, ball: atom.ball, coefficient: atom.coefficient, params })
}

/// Outcome of one checked clause; `slack >= 0` exactly when it passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Clause {
    pub pass: bool,
    pub slack: f64,
}

impl Clause {
    fn at_most(measured: f64, bound: f64) -> Self {
        Self { pass: measured <= bound, slack: bound - measured }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomReport {
    pub support: Clause,
    pub size: Clause,
    pub moments: Clause,
}

impl AtomReport {
    pub fn passes(&self) -> bool {
        self.support.pass && self.size.pass && self.moments.pass
    }
}

fn lq_norm(values: &[f64], q: f64, cell: f64) -> f64 {
    if q.is_infinite() {
        values.iter().copied().fold(0.0, f64::max)
    } else {
        (values.iter().map(|v| v.powf(q)).sum::<f64>() * cell).powf(1.0 / q)
    }
}

/// Multi-indices `beta` with `|beta| <= d`.
fn multi_indices(dim: usize, d: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    for total in 0..=d {
        if dim == 1 {
            out.push([total, 0]);
        } else {
            for a in 0..=total {
                out.push([a, total - a]);
            }
        }
    }
    out
}

/// Largest `|int f x^beta| / (||f||_1 L^|beta|)` over `|beta| <= d`.
fn worst_moment(f: &SampledFunction, d: usize) -> f64 {
    let grid = f.grid();
    let cell = grid.cell_volume();
    let l1: f64 = f.moduli().iter().sum::<f64>() * cell;
    if l1 == 0.0 {
        return 0.0;
    }
    multi_indices(grid.dim(), d)
        .into_iter()
        .map(|beta| {
            let m: Complex64 = f
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let x = grid.point(i);
                    v * (x[0].powi(beta[0] as i32) * x[1].powi(beta[1] as i32))
                })
                .sum::<Complex64>()
                * cell;
            m.norm() / (l1 * grid.half_width().powi((beta[0] + beta[1]) as i32))
        })
        .fold(0.0, f64::max)
}

/// Support, size and moment clauses of an `(X, q, d)`-atom.
pub fn check_atom(a: &SampledFunction, ball: &Ball, space: &ResolvedSpace, q: f64, d: usize) -> Result<AtomReport> {
    let grid = *a.grid();
    if *space.grid() != grid {
        return Err(LpxError::GridMismatch);
    }
    if !(q >= 1.0) {
        return Err(LpxError::InvalidParameter(format!("q must be >= 1, got {q}")));
    }
    let moduli = a.moduli();
    let outside = (0..grid.len())
        .filter(|&i| !ball.contains(&grid, i))
        .map(|i| moduli[i])
        .fold(0.0, f64::max);
    let bound = size_bound(ball, space, q)?;
    let size = lq_norm(&moduli, q, grid.cell_volume());
    Ok(AtomReport {
        support: Clause::at_most(outside, 0.0),
        size: Clause::at_most(size, bound),
        moments: Clause::at_most(worst_moment(a, d), MOMENT_TOLERANCE),
    })
}

/// `||m||_{L^q(S_j)}` against `2^{-j eps} |S_j|^{1/q} / ||1_B||_X` on one annulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusCheck {
    pub j: usize,
    pub norm: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoleculeReport {
    /// Largest relative moment over `|beta| <= d`.
    pub moment_ratio: f64,
    pub moments: Clause,
    pub annuli: Vec<AnnulusCheck>,
}

pub fn check_molecule(m: &Molecule, space: &ResolvedSpace) -> Result<MoleculeReport> {
    let f = &m.func;
    let grid = *f.grid();
    let cell = grid.cell_volume();
    let moduli = f.moduli();
    let indicator = space.norm(&m.ball.indicator(&grid))?;
    let mut annuli = Vec::new();
    let mut j = 0;
    loop {
        let outer = m.ball.dilated(2f64.powi(j as i32));
        if outer.radius > grid.half_width() && j > 0 {
            break;
        }
        let inner = (j > 0).then(|| m.ball.dilated(2f64.powi(j as i32 - 1)));
        let shell: Vec<usize> = (0..grid.len())
            .filter(|&i| outer.contains(&grid, i) && !inner.is_some_and(|b| b.contains(&grid, i)))
            .collect();
        let values: Vec<f64> = shell.iter().map(|&i| moduli[i]).collect();
        let measure = shell.len() as f64 * cell;
        let bound = 2f64.powf(-(j as f64) * m.params.epsilon) * measure.powf(1.0 / m.params.q) / indicator;
        annuli.push(AnnulusCheck { j, norm: lq_norm(&values, m.params.q, cell), bound });
        if outer.radius > grid.half_width() {
            break;
        }
        j += 1;
    }
    let moment_ratio = worst_moment(f, m.params.d);
    Ok(MoleculeReport { moment_ratio, moments: Clause::at_most(moment_ratio, MOMENT_TOLERANCE), annuli })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_annular_kernel, calderon_companion};
    use crate::spaces::SpaceDescriptor;

    fn grid() -> GridSpec {
        GridSpec::new(1, 8.0, 256).unwrap()
    }

    fn scales() -> ScaleGrid {
        ScaleGrid::new(1.0 / 16.0, 4.0, 4).unwrap()
    }

    fn l2(g: &GridSpec) -> ResolvedSpace {
        SpaceDescriptor::Lebesgue { p: 2.0 }.resolve(g).unwrap()
    }

    fn bumpy_field(g: GridSpec, s: ScaleGrid) -> HalfSpaceField {
        HalfSpaceField::from_fn(g, s, |y, t| {
            if y[0].abs() < 2.0 && t < 1.0 {
                Complex64::new((3.0 * y[0]).sin() + 0.3, t - 0.5 * y[0])
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap()
    }

    #[test]
    fn zero_field_has_no_atoms() {
        let g = grid();
        let d = tent_decompose(&HalfSpaceField::zeros(g, scales()), &l2(&g)).unwrap();
        assert!(d.atoms.is_empty());
        assert!(d.residual.is_zero());
    }

    #[test]
    fn decomposition_rebuilds_and_partitions() {
        let g = grid();
        let x = l2(&g);
        let f = bumpy_field(g, scales());
        let d = tent_decompose(&f, &x).unwrap();
        assert!(!d.atoms.is_empty());
        let back = d.reconstruct();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-300));
        }
        for c in 0..f.values().len() {
            let owners = d.atoms.iter().filter(|a| a.field.values()[c].norm_sqr() > 0.0).count();
            assert_eq!(owners, usize::from(f.values()[c].norm_sqr() > 0.0));
            let sum: f64 = d.atoms.iter().map(|a| a.coefficient * a.field.values()[c].norm()).sum();
            assert!((sum - f.values()[c].norm()).abs() <= 1e-12 * f.values()[c].norm().max(1e-300));
        }
        for a in &d.atoms {
            assert!(a.in_tent());
            assert!(a.passes_size_check(&x).unwrap());
        }
    }

    #[test]
    fn single_atom_input_gives_one_atom() {
        let g = grid();
        let x = l2(&g);
        let s = scales();
        let ball = Ball::new([0.0, 0.0], 1.0);
        let shape = HalfSpaceField::from_fn(g, s.clone(), |y, t| {
            if t < 1.0 && y[0].abs() < 1.0 - t { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
        })
        .unwrap();
        let a = tent_functional(&shape, 1.0).unwrap().real_parts();
        let norm = SIZE_EXPONENTS
            .iter()
            .map(|&p| size_bound(&ball, &x, p).unwrap() / lp_norm(&a, p, g.cell_volume()))
            .fold(f64::INFINITY, f64::min);
        let atom = shape.scaled(Complex64::new(norm, 0.0));
        assert!(atom_size_slack(&atom, &ball, &x).unwrap() > -1e-9);
        let lambda = 3.5;
        let d = tent_decompose(&atom.scaled(Complex64::new(lambda, 0.0)), &x).unwrap();
        assert_eq!(d.atoms.len(), 1);
        let c = d.atoms[0].coefficient;
        assert!(c <= 4.0 * lambda && c >= lambda / 4.0, "coefficient {c}");
    }

    #[test]
    fn molecule_of_single_cell_matches_kernel_sum() {
        let g = grid();
        let s = scales();
        let pair = calderon_companion(&build_annular_kernel(g).unwrap(), &s).unwrap();
        let (y0, k0, lambda) = (100usize, 9usize, 0.7);
        let mut values = vec![Complex64::new(0.0, 0.0); g.len() * s.len()];
        values[k0 * g.len() + y0] = Complex64::new(1.0, 0.0);
        let atom = TentAtom {
            field: HalfSpaceField::new(g, s.clone(), values).unwrap(),
            ball: Ball::new(g.point(y0), 1.0),
            coefficient: lambda,
        };
        let params = MoleculeParams::default_for(1, 2.0);
        let m = synthesize_molecule(&atom, &pair.psi, &s, params).unwrap().weighted();
        // direct Fourier sum for psi_t(x - y0)
        let t = s.scales()[k0];
        let period = 2.0 * g.half_width();
        let scale = lambda * g.cell_volume() * s.log_weight();
        for x in [0usize, 50, 100, 101, 200] {
            let dx = g.coord(x) - g.coord(y0);
            let direct: f64 = (0..g.n())
                .map(|k| {
                    let xi = g.axis_frequency(k);
                    pair.psi.eval_radius(t * xi.abs()) * (2.0 * std::f64::consts::PI * xi * dx).cos()
                })
                .sum::<f64>()
                / period;
            let got = m.values()[x].re;
            assert!((got - scale * direct).abs() <= 1e-10 * scale.max(1e-300) * (1.0 + direct.abs()), "{got}");
        }
        assert!(check_molecule(&synthesize_molecule(&atom, &pair.psi, &s, params).unwrap(), &l2(&g))
            .unwrap()
            .moment_ratio
            <= 1e-8);
    }

    #[test]
    fn zero_atom_synthesizes_zero() {
        let g = grid();
        let s = scales();
        let pair = calderon_companion(&build_annular_kernel(g).unwrap(), &s).unwrap();
        let atom = TentAtom { field: HalfSpaceField::zeros(g, s.clone()), ball: Ball::new([0.0; 2], 1.0), coefficient: 1.0 };
        let m = synthesize_molecule(&atom, &pair.psi, &s, MoleculeParams::default_for(1, 1.0)).unwrap();
        assert!(m.func.is_zero());
    }

    #[test]
    fn antisymmetric_step_is_an_atom() {
        let g = grid();
        let x = l2(&g);
        let ball = Ball::new([0.0, 0.0], 1.0);
        let c = 2.0 * x.norm(&ball.indicator(&g)).unwrap();
        let a = SampledFunction::from_real_fn(g, |p| {
            if (0.0..1.0).contains(&p[0]) {
                1.0 / c
            } else if (-1.0..0.0).contains(&p[0]) {
                -1.0 / c
            } else {
                0.0
            }
        })
        .unwrap();
        let r = check_atom(&a, &ball, &x, f64::INFINITY, 0).unwrap();
        assert!(r.passes(), "{r:?}");

        let biased = a.map_modulus(|v| v).unwrap();
        assert!(!check_atom(&biased, &ball, &x, f64::INFINITY, 0).unwrap().moments.pass);
        let moved = a.translated([64, 0]);
        assert!(!check_atom(&moved, &ball, &x, f64::INFINITY, 0).unwrap().support.pass);
    }
}
