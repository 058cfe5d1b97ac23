//! Desk-scale experiments: norm equivalences between the Hardy norm and the
//! square functions, change of angle in tent spaces, the weighted embedding,
//! decay at infinity, and the tent decomposition. Each produces an
//! [`ExperimentReport`] with every threshold next to its measured value.
//!
//! Trials draw from a per-trial ChaCha stream (`seed`, stream = trial index),
//! so reports are bit-identical for a fixed seed regardless of thread count.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::atoms::{
    check_molecule, coefficient_functional, synthesize_molecule, tent_decompose, Ball, MoleculeParams,
};
use crate::error::{LpxError, Result};
use crate::grid::{GridSpec, HalfSpaceField, SampledFunction, ScaleGrid};
use crate::kernels::{build_gaussian_kernel, build_kernel, calderon_companion, Kernel, KernelKind};
use crate::maximal::{default_peetre_b, hardy_norm, hl_maximal, BallFamily};
use crate::spaces::{ResolvedSpace, SpaceDescriptor};
use crate::squarefuncs::{g_lambda_star_field, tent_functional};
use crate::transforms::{build_field, convolve_at_scale, ConvolutionPlan};

/// Largest accepted `max/min` ratio across trials.
pub const SPREAD_THRESHOLD: f64 = 10.0;
/// Additive slack on the change-of-angle exponent.
pub const SLOPE_SLACK: f64 = 0.15;
/// Relative tolerance of pointwise comparisons.
pub const POINTWISE_TOLERANCE: f64 = 1e-12;
/// `omega = [M(1_{B(0,1)})]^epsilon` in the embedding experiment.
pub const EMBEDDING_EPSILON: f64 = 0.9;
/// Relative slack on the factor-2-per-octave decay.
pub const VANISH_SLACK: f64 = 0.25;
/// Smallest number of trials an equivalence experiment accepts.
pub const MIN_TRIALS: usize = 10;

/// Grid, scales, seed and trial count shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessConfig {
    pub grid: GridSpec,
    pub scales: ScaleGrid,
    pub seed: u64,
    pub trials: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(1, 8.0, 512).expect("default grid is valid"),
            scales: ScaleGrid::new(1.0 / 16.0, 32.0, 4).expect("default scales are valid"),
            seed: 20240917,
            trials: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Gaussian-windowed sinusoid.
    BandLimited,
    /// Antisymmetric step on a ball, normalized as an `(X, inf, 0)`-atom.
    Atom,
    /// Translated and dilated Gaussian.
    Bump,
}

/// Band-limited : atoms : bumps = 2 : 1 : 1.
pub fn family_of(trial: usize) -> Family {
    match trial % 4 {
        0 | 1 => Family::BandLimited,
        2 => Family::Atom,
        _ => Family::Bump,
    }
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn random_center(grid: &GridSpec, rng: &mut ChaCha8Rng, reach: f64) -> [f64; 2] {
    let mut c = [0.0; 2];
    for v in c.iter_mut().take(grid.dim()) {
        *v = rng.gen_range(-reach..reach);
    }
    c
}

/// Nearest grid point to `c`.
fn snap(grid: &GridSpec, c: [f64; 2]) -> usize {
    let h = grid.spacing();
    let l = grid.half_width();
    let mut mi = [0usize; 2];
    for axis in 0..grid.dim() {
        mi[axis] = (((c[axis] + l) / h - 0.5).round() as i64).rem_euclid(grid.n() as i64) as usize;
    }
    grid.flat_index(mi)
}

/// One member of the mixed test family.
pub fn trial_function(
    grid: &GridSpec,
    space: &ResolvedSpace,
    family: Family,
    rng: &mut ChaCha8Rng,
) -> Result<SampledFunction> {
    let dim = grid.dim();
    match family {
        Family::BandLimited => {
            let c = random_center(grid, rng, 2.0);
            let width = rng.gen_range(0.5..1.5);
            let freq = rng.gen_range(0.5..3.0);
            let angle: f64 = if dim == 2 { rng.gen_range(0.0..2.0 * PI) } else { 0.0 };
            let phase = rng.gen_range(0.0..2.0 * PI);
            let amp = rng.gen_range(0.5..2.0);
            let dir = [angle.cos(), angle.sin()];
            SampledFunction::from_real_fn(*grid, |x| {
                let d = [x[0] - c[0], if dim == 2 { x[1] - c[1] } else { 0.0 }];
                let r2 = d[0] * d[0] + d[1] * d[1];
                amp * (-r2 / (width * width)).exp() * (2.0 * PI * freq * (dir[0] * d[0] + dir[1] * d[1]) + phase).cos()
            })
        }
        Family::Atom => Ok(random_atom(grid, space, rng)?.0),
        Family::Bump => {
            let c = random_center(grid, rng, 2.0);
            let width = rng.gen_range(0.25..1.0);
            let amp = rng.gen_range(0.5..2.0);
            SampledFunction::from_real_fn(*grid, |x| {
                let r2 = (x[0] - c[0]).powi(2) + if dim == 2 { (x[1] - c[1]).powi(2) } else { 0.0 };
                amp * (-r2 / (width * width)).exp()
            })
        }
    }
}

/// Antisymmetric step `+-1 / (2 ||1_B||_X)` across the center of a random ball.
pub fn random_atom(grid: &GridSpec, space: &ResolvedSpace, rng: &mut ChaCha8Rng) -> Result<(SampledFunction, Ball)> {
    let center = grid.point(snap(grid, random_center(grid, rng, 2.0)));
    let radius = rng.gen_range(0.25..2.0);
    let ball = Ball::new(center, radius);
    let height = 1.0 / (2.0 * space.norm(&ball.indicator(grid))?);
    let period = 2.0 * grid.half_width();
    let values = (0..grid.len())
        .map(|i| {
            if !ball.contains(grid, i) {
                return 0.0;
            }
            let d = grid.point(i)[0] - center[0];
            let d = d - period * (d / period).round();
            if d.abs() < 0.5 * grid.spacing() {
                0.0
            } else {
                height * d.signum()
            }
        })
        .collect();
    Ok((SampledFunction::from_real(*grid, values)?, ball))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self { name: name.into(), measured, threshold, pass: measured <= threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    pub family: String,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub spread: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { min, max, spread: max / min }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config_hash: String,
    pub config: HarnessConfig,
    pub space: Option<SpaceDescriptor>,
    pub space_label: String,
    pub kernel_kind: Option<KernelKind>,
    pub parameters: BTreeMap<String, f64>,
    pub trials: Vec<TrialRecord>,
    pub summary: BTreeMap<String, Summary>,
    pub fitted_exponent: Option<f64>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

#[derive(Serialize)]
struct HashInput<'a> {
    name: &'a str,
    config: &'a HarnessConfig,
    space: &'a Option<SpaceDescriptor>,
    kernel_kind: &'a Option<KernelKind>,
    parameters: &'a BTreeMap<String, f64>,
}

impl ExperimentReport {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        name: &str,
        config: &HarnessConfig,
        space: Option<&SpaceDescriptor>,
        kernel_kind: Option<KernelKind>,
        parameters: BTreeMap<String, f64>,
        trials: Vec<TrialRecord>,
        fitted_exponent: Option<f64>,
        mut checks: Vec<Check>,
        warnings: Vec<String>,
    ) -> Result<Self> {
        let space = space.cloned();
        let config_hash = crate::io::config_hash(&HashInput {
            name,
            config,
            space: &space,
            kernel_kind: &kernel_kind,
            parameters: &parameters,
        })?;
        let mut keys: Vec<&String> = trials.iter().flat_map(|t| t.values.keys()).collect();
        keys.sort();
        keys.dedup();
        let mut summary = BTreeMap::new();
        for key in keys {
            let vals: Vec<f64> = trials.iter().filter_map(|t| t.values.get(key).copied()).collect();
            summary.insert(key.clone(), Summary::of(&vals));
        }
        let nonfinite = trials.iter().flat_map(|t| t.values.values()).filter(|v| !v.is_finite()).count();
        checks.push(Check::at_most("nonfinite_values", nonfinite as f64, 0.0));
        let pass = checks.iter().all(|c| c.pass);
        Ok(Self {
            name: name.to_owned(),
            config_hash,
            config: config.clone(),
            space_label: space.as_ref().map(SpaceDescriptor::label).unwrap_or_default(),
            space,
            kernel_kind,
            parameters,
            trials,
            summary,
            fitted_exponent,
            checks,
            warnings,
            pass,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per trial value: `trial,family,metric,value`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| LpxError::Parse(e.to_string());
        w.write_record(["trial", "family", "metric", "value"]).map_err(err)?;
        for t in &self.trials {
            for (k, v) in &t.values {
                w.write_record([t.index.to_string(), t.family.clone(), k.clone(), v.to_string()]).map_err(err)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| LpxError::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| LpxError::Parse(e.to_string()))
    }

    /// Writes `<dir>/<name>.json` and `<dir>/<name>.csv`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.json", self.name));
        let csv = dir.join(format!("{}.csv", self.name));
        fs::write(&json, self.to_json()? + "\n")?;
        fs::write(&csv, self.to_csv()?)?;
        Ok(vec![json, csv])
    }
}

fn family_name(f: Family) -> String {
    serde_json::to_value(f).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn square_function_kernel(kind: KernelKind, grid: GridSpec) -> Result<Kernel> {
    if kind == KernelKind::Averaging {
        return Err(LpxError::InvalidParameter("square functions need a kernel with vanishing mean".into()));
    }
    build_kernel(kind, grid)
}

/// `lambda = max{1, 2/floor} + 1/2`.
pub fn equivalence_lambda(floor_exponent: f64) -> f64 {
    1f64.max(2.0 / floor_exponent) + 0.5
}

const NORM_NAMES: [&str; 4] = ["hardy", "S", "g", "gstar"];

/// Hardy norm against `||S f||_X`, `||g f||_X` and `||g_lambda^* f||_X` over the mixed family.
pub fn equivalence_experiment(
    config: &HarnessConfig,
    space: &SpaceDescriptor,
    kernel_kind: KernelKind,
) -> Result<ExperimentReport> {
    if config.trials < MIN_TRIALS {
        return Err(LpxError::InvalidParameter(format!(
            "equivalence needs at least {MIN_TRIALS} trials, got {}",
            config.trials
        )));
    }
    let grid = config.grid;
    let x = space.resolve(&grid)?;
    let floor = x.floor_exponent();
    let lambda = equivalence_lambda(floor);
    let b = default_peetre_b(grid.dim(), floor);
    let plan = ConvolutionPlan::new(&square_function_kernel(kernel_kind, grid)?, &config.scales);
    let hardy_plan = ConvolutionPlan::new(&build_gaussian_kernel(grid), &config.scales);
    let domination = 2f64.powf(lambda * grid.dim() as f64 / 2.0);

    let trials: Result<Vec<(TrialRecord, usize)>> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(config.seed, i);
            let family = family_of(i);
            let f = trial_function(&grid, &x, family, &mut rng)?;
            let field = build_field(&f, &plan)?;
            let s = tent_functional(&field, 1.0)?;
            let lw = config.scales.log_weight();
            let mut g2 = vec![0.0f64; grid.len()];
            for k in 0..config.scales.len() {
                for (acc, v) in g2.iter_mut().zip(field.slice(k)) {
                    *acc += v.norm_sqr() * lw;
                }
            }
            let g = SampledFunction::from_real(grid, g2.into_iter().map(f64::sqrt).collect())?;
            let gstar = g_lambda_star_field(&field, lambda)?;
            let violations = s
                .values()
                .iter()
                .zip(gstar.values())
                .filter(|(a, b)| a.re > domination * b.re * (1.0 + POINTWISE_TOLERANCE))
                .count();
            let norms = [hardy_norm(&f, &x, &hardy_plan, b)?, x.norm(&s)?, x.norm(&g)?, x.norm(&gstar)?];
            let mut values = BTreeMap::new();
            for (name, v) in NORM_NAMES.iter().zip(norms) {
                values.insert(format!("norm_{name}"), v);
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    values.insert(format!("{}/{}", NORM_NAMES[j], NORM_NAMES[i]), norms[j] / norms[i]);
                }
            }
            Ok((TrialRecord { index: i, family: family_name(family), values }, violations))
        })
        .collect();
    let trials = trials?;
    let violations: usize = trials.iter().map(|t| t.1).sum();
    let trials: Vec<TrialRecord> = trials.into_iter().map(|t| t.0).collect();

    let mut checks = Vec::new();
    for (i, lo) in NORM_NAMES.iter().enumerate() {
        for hi in &NORM_NAMES[i + 1..] {
            let key = format!("{hi}/{lo}");
            let vals: Vec<f64> = trials.iter().map(|t| t.values[&key]).collect();
            checks.push(Check::at_most(format!("spread {key}"), Summary::of(&vals).spread, SPREAD_THRESHOLD));
        }
    }
    checks.push(Check::at_most("domination_violations", violations as f64, 0.0));
    let mut warnings = Vec::new();
    if plan.wrap_warning() {
        warnings.push("kernel mass at t_max reaches beyond the lowest frequency band".into());
    }
    let parameters = BTreeMap::from([
        ("lambda".to_owned(), lambda),
        ("peetre_b".to_owned(), b),
        ("floor_exponent".to_owned(), floor),
        ("domination_constant".to_owned(), domination),
        ("spread_threshold".to_owned(), SPREAD_THRESHOLD),
    ]);
    ExperimentReport::assemble(
        "equivalence",
        config,
        Some(space),
        Some(kernel_kind),
        parameters,
        trials,
        None,
        checks,
        warnings,
    )
}

/// Half-width of the region holding the spatial support of the random fields.
fn field_reach(grid: &GridSpec) -> f64 {
    grid.half_width() / 8.0
}

/// Random smooth field supported in `|y| <= L/8` on the scales where the
/// `alpha_max` cone stays inside `[-L/2, L/2]^n`.
pub fn random_concentrated_field(
    grid: &GridSpec,
    scales: &ScaleGrid,
    alpha_max: f64,
    rng: &mut ChaCha8Rng,
) -> Result<HalfSpaceField> {
    let reach = field_reach(grid);
    let t_low = 4.0 * grid.spacing();
    let t_high = 0.99 * (0.5 * grid.half_width() - reach * (grid.dim() as f64).sqrt()) / alpha_max;
    if !scales.scales().iter().any(|&t| t >= t_low && t <= t_high) {
        return Err(LpxError::InvalidParameter(format!(
            "no scale in [{t_low}, {t_high}] for concentrated fields"
        )));
    }
    let blobs: Vec<([f64; 2], f64, Complex64)> = (0..rng.gen_range(2..=4))
        .map(|_| {
            let c = random_center(grid, rng, reach);
            let w = rng.gen_range(0.1..0.5) * reach;
            let a = Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
            (c, w, a)
        })
        .collect();
    let dim = grid.dim();
    HalfSpaceField::from_fn(*grid, scales.clone(), |y, t| {
        let inside = y[..dim].iter().all(|v| v.abs() <= reach);
        if !inside || t < t_low || t > t_high {
            return Complex64::new(0.0, 0.0);
        }
        blobs
            .iter()
            .map(|(c, w, a)| {
                let r2: f64 = (0..dim).map(|k| (y[k] - c[k]).powi(2)).sum();
                a * (-r2 / (w * w)).exp() * (t / t_high)
            })
            .sum()
    })
}

/// Errors when some `alpha_max` cone over the support leaves `[-L/2, L/2]^n`.
fn check_cone(field: &HalfSpaceField, alpha_max: f64) -> Result<()> {
    let grid = field.grid();
    let box_half = 0.5 * grid.half_width();
    for (k, &t) in field.scales().scales().iter().enumerate() {
        for (i, v) in field.slice(k).iter().enumerate() {
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let y = grid.point(i);
            let far = (0..grid.dim()).map(|a| y[a].abs()).fold(0.0, f64::max) + alpha_max * t;
            if far >= box_half {
                return Err(LpxError::ConeOverflow { alpha: alpha_max });
            }
        }
    }
    Ok(())
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// `max{n/2, n/s} + slack` with `s` the exponent floor of the space.
pub fn change_of_angle_bound(dim: usize, floor_exponent: f64) -> f64 {
    let n = dim as f64;
    (n / 2.0).max(n / floor_exponent) + SLOPE_SLACK
}

/// Log-log slope of `||A^(alpha) F||_X` in `alpha` over random concentrated fields.
pub fn change_of_angle_experiment(
    config: &HarnessConfig,
    space: &SpaceDescriptor,
    alphas: &[f64],
) -> Result<ExperimentReport> {
    if alphas.len() < 2 || alphas.iter().any(|a| ![1.0, 2.0, 4.0, 8.0].contains(a)) {
        return Err(LpxError::InvalidParameter(format!(
            "alphas must be at least two of 1, 2, 4, 8, got {alphas:?}"
        )));
    }
    let mut alphas = alphas.to_vec();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let alpha_max = *alphas.last().expect("nonempty");
    let grid = config.grid;
    let x = space.resolve(&grid)?;
    let logs: Vec<f64> = alphas.iter().map(|a| a.ln()).collect();

    let trials: Result<Vec<(TrialRecord, usize)>> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(config.seed, i);
            let field = random_concentrated_field(&grid, &config.scales, alpha_max, &mut rng)?;
            check_cone(&field, alpha_max)?;
            let mut norms = Vec::with_capacity(alphas.len());
            for &a in &alphas {
                norms.push(x.norm(&tent_functional(&field, a)?)?);
            }
            let drops = norms.windows(2).filter(|w| w[1] < w[0] * (1.0 - POINTWISE_TOLERANCE)).count();
            let slope = least_squares_slope(&logs, &norms.iter().map(|v| v.ln()).collect::<Vec<_>>());
            let mut values = BTreeMap::new();
            for (a, v) in alphas.iter().zip(&norms) {
                values.insert(format!("norm_alpha_{a}"), *v);
            }
            values.insert("slope".to_owned(), slope);
            Ok((TrialRecord { index: i, family: "concentrated_field".into(), values }, drops))
        })
        .collect();
    let trials = trials?;
    let drops: usize = trials.iter().map(|t| t.1).sum();
    let trials: Vec<TrialRecord> = trials.into_iter().map(|t| t.0).collect();
    // pooled least squares with one intercept per trial is the mean slope
    let slope = trials.iter().map(|t| t.values["slope"]).sum::<f64>() / trials.len() as f64;
    let bound = change_of_angle_bound(grid.dim(), x.floor_exponent());
    let checks = vec![
        Check::at_most("fitted_slope", slope, bound),
        Check::at_most("monotonicity_violations", drops as f64, 0.0),
    ];
    let mut parameters = BTreeMap::from([
        ("floor_exponent".to_owned(), x.floor_exponent()),
        ("slope_bound".to_owned(), bound),
        ("slope_slack".to_owned(), SLOPE_SLACK),
    ]);
    for (k, a) in alphas.iter().enumerate() {
        parameters.insert(format!("alpha_{k}"), *a);
    }
    ExperimentReport::assemble(
        "change_of_angle",
        config,
        Some(space),
        None,
        parameters,
        trials,
        Some(slope),
        checks,
        Vec::new(),
    )
}

/// `[M(1_{B(0,1)})]^epsilon` over the dyadic family.
pub fn embedding_weight(grid: &GridSpec, epsilon: f64) -> Result<Vec<f64>> {
    let ball = Ball::new([0.0, 0.0], 1.0).indicator(grid);
    Ok(hl_maximal(&ball, &BallFamily::dyadic(grid)).values().iter().map(|v| v.re.powf(epsilon)).collect())
}

/// `(sum |f|^s omega h^n)^{1/s}`.
pub fn weighted_lebesgue_norm(f: &SampledFunction, s: f64, weight: &[f64]) -> f64 {
    let sum: f64 = f.moduli().iter().zip(weight).map(|(v, w)| v.powf(s) * w).sum();
    (sum * f.grid().cell_volume()).powf(1.0 / s)
}

/// `||f||_{L^s_omega} / ||f||_X` over the mixed family.
pub fn embedding_experiment(config: &HarnessConfig, space: &SpaceDescriptor, s: f64) -> Result<ExperimentReport> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(LpxError::InvalidParameter(format!("s must be positive, got {s}")));
    }
    let grid = config.grid;
    let x = space.resolve(&grid)?;
    let weight = embedding_weight(&grid, EMBEDDING_EPSILON)?;
    let trials: Result<Vec<TrialRecord>> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(config.seed, i);
            let family = family_of(i);
            let f = trial_function(&grid, &x, family, &mut rng)?;
            let ratio = weighted_lebesgue_norm(&f, s, &weight) / x.norm(&f)?;
            Ok(TrialRecord { index: i, family: family_name(family), values: BTreeMap::from([("ratio".to_owned(), ratio)]) })
        })
        .collect();
    let trials = trials?;
    let ratios: Vec<f64> = trials.iter().map(|t| t.values["ratio"]).collect();
    let summary = Summary::of(&ratios);
    let indicator = Ball::new([0.0, 0.0], 1.0).indicator(&grid);
    let indicator_ratio = weighted_lebesgue_norm(&indicator, s, &weight) / x.norm(&indicator)?;
    let nonpositive = ratios.iter().filter(|r| !(**r > 0.0)).count();
    let checks = vec![
        Check::at_most("spread ratio", summary.spread, SPREAD_THRESHOLD),
        Check::at_most("nonpositive_ratios", nonpositive as f64, 0.0),
    ];
    let parameters = BTreeMap::from([
        ("s".to_owned(), s),
        ("epsilon".to_owned(), EMBEDDING_EPSILON),
        ("indicator_ratio".to_owned(), indicator_ratio),
        ("spread_threshold".to_owned(), SPREAD_THRESHOLD),
    ]);
    ExperimentReport::assemble("embedding", config, Some(space), None, parameters, trials, None, checks, Vec::new())
}

/// `sup |phi_t * f|` at each probe scale; passes when each octave cuts it by 2.
pub fn vanish_at_infinity_check(
    config: &HarnessConfig,
    f: &SampledFunction,
    phi: &Kernel,
    t_probe: &[f64],
) -> Result<ExperimentReport> {
    if t_probe.is_empty() || t_probe.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(LpxError::InvalidParameter("probe scales must be increasing".into()));
    }
    let plan = ConvolutionPlan::new(phi, &config.scales);
    let sups: Result<Vec<f64>> = t_probe.iter().map(|&t| Ok(convolve_at_scale(f, &plan, t)?.max_modulus())).collect();
    let sups = sups?;
    let mut worst = 0.0f64;
    for (w, t) in sups.windows(2).zip(t_probe.windows(2)) {
        if w[0] == 0.0 {
            continue;
        }
        let allowed = 2f64.powf(-(t[1] / t[0]).log2());
        worst = worst.max((w[1] / w[0]) / allowed);
    }
    let trials = t_probe
        .iter()
        .zip(&sups)
        .enumerate()
        .map(|(i, (t, s))| TrialRecord {
            index: i,
            family: "probe".into(),
            values: BTreeMap::from([("t".to_owned(), *t), ("sup".to_owned(), *s)]),
        })
        .collect();
    let checks = vec![Check::at_most("worst_octave_ratio_over_half", worst, 1.0 + VANISH_SLACK)];
    let parameters = BTreeMap::from([("slack".to_owned(), VANISH_SLACK)]);
    ExperimentReport::assemble(
        "vanish_at_infinity",
        config,
        None,
        Some(phi.kind()),
        parameters,
        trials,
        None,
        checks,
        Vec::new(),
    )
}

/// Coefficient-functional exponent `s = min(1, floor) / 2`.
pub fn decomposition_exponent(floor_exponent: f64) -> f64 {
    0.5 * floor_exponent.min(1.0)
}

/// Tent decompositions of random concentrated fields and the molecules they synthesize.
pub fn decomposition_experiment(config: &HarnessConfig, space: &SpaceDescriptor) -> Result<ExperimentReport> {
    let grid = config.grid;
    let x = space.resolve(&grid)?;
    let s = decomposition_exponent(x.floor_exponent());
    let pair = calderon_companion(&build_kernel(KernelKind::Annular, grid)?, &config.scales)?;
    let params = MoleculeParams::default_for(grid.dim(), x.floor_exponent());
    let trials: Result<Vec<TrialRecord>> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(config.seed, i);
            let field = random_concentrated_field(&grid, &config.scales, 1.0, &mut rng)?;
            let d = tent_decompose(&field, &x)?;
            let rebuilt = d.reconstruct();
            let scale = field.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
            let mut recon = 0.0f64;
            let mut additivity = 0.0f64;
            for (c, v) in field.values().iter().enumerate() {
                recon = recon.max((rebuilt.values()[c] - v).norm() / scale);
                let sum: f64 = d.atoms.iter().map(|a| a.coefficient * a.field.values()[c].norm()).sum();
                additivity = additivity.max((sum - v.norm()).abs() / scale);
            }
            let mut size_failures = 0usize;
            let mut moment = 0.0f64;
            for a in &d.atoms {
                if !a.passes_size_check(&x)? || !a.in_tent() {
                    size_failures += 1;
                }
                let m = synthesize_molecule(a, &pair.psi, &config.scales, params)?;
                moment = moment.max(check_molecule(&m, &x)?.moment_ratio);
            }
            let area = x.norm(&tent_functional(&field, 1.0)?)?;
            let ratio = coefficient_functional(&d, &x, s)? / area;
            let values = BTreeMap::from([
                ("atoms".to_owned(), d.atoms.len() as f64),
                ("reconstruction_error".to_owned(), recon),
                ("additivity_error".to_owned(), additivity),
                ("size_failures".to_owned(), size_failures as f64),
                ("molecule_moment_ratio".to_owned(), moment),
                ("coefficient_ratio".to_owned(), ratio),
            ]);
            Ok(TrialRecord { index: i, family: "concentrated_field".into(), values })
        })
        .collect();
    let trials = trials?;
    let max_of = |key: &str| trials.iter().map(|t| t.values[key]).fold(0.0, f64::max);
    let ratios: Vec<f64> = trials.iter().map(|t| t.values["coefficient_ratio"]).collect();
    let checks = vec![
        Check::at_most("reconstruction_error", max_of("reconstruction_error"), 1e-12),
        Check::at_most("additivity_error", max_of("additivity_error"), 1e-12),
        Check::at_most("size_failures", max_of("size_failures"), 0.0),
        Check::at_most("molecule_moment_ratio", max_of("molecule_moment_ratio"), 1e-8),
        Check::at_most("spread coefficient_ratio", Summary::of(&ratios).spread, SPREAD_THRESHOLD),
    ];
    let parameters = BTreeMap::from([
        ("s".to_owned(), s),
        ("molecule_epsilon".to_owned(), params.epsilon),
        ("spread_threshold".to_owned(), SPREAD_THRESHOLD),
    ]);
    ExperimentReport::assemble(
        "decomposition",
        config,
        Some(space),
        Some(KernelKind::Annular),
        parameters,
        trials,
        None,
        checks,
        Vec::new(),
    )
}

/// `x_0 e^{-64 |x|^2}`: concentrated and mean zero, for the decay check.
pub fn vanish_probe_function(grid: &GridSpec) -> Result<SampledFunction> {
    SampledFunction::from_real_fn(*grid, |x| x[0] * (-64.0 * x.iter().map(|v| v * v).sum::<f64>()).exp())
}

/// The four default experiments on `L^2` with the annular kernel.
pub fn default_suite(config: &HarnessConfig) -> Result<Vec<ExperimentReport>> {
    let l2 = SpaceDescriptor::Lebesgue { p: 2.0 };
    let phi = build_kernel(KernelKind::Annular, config.grid)?;
    let probes: Vec<f64> = [2.0, 4.0, 8.0, 16.0].into_iter().filter(|t| config.scales.contains(*t)).collect();
    Ok(vec![
        equivalence_experiment(config, &l2, KernelKind::Annular)?,
        change_of_angle_experiment(config, &l2, &[1.0, 2.0, 4.0, 8.0])?,
        embedding_experiment(config, &l2, 2.0)?,
        vanish_at_infinity_check(config, &vanish_probe_function(&config.grid)?, &phi, &probes)?,
    ])
}
