//! Command-line front end: `kernel`, `compute`, `decompose` and `verify`.
//!
//! Exit codes: 0 success, 1 an experiment failed, 2 configuration or input
//! error, 3 numeric failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::LpxError;
use crate::grid::{GridSpec, SampledFunction, ScaleGrid};
use crate::harness::{self, ExperimentReport, HarnessConfig};
use crate::io;
use crate::kernels::{build_gaussian_kernel, build_kernel, calderon_companion, export_kernel, KernelKind};
use crate::maximal::{default_peetre_b, hardy_norm, hl_maximal, peetre_maximal, BallFamily};
use crate::spaces::{ResolvedSpace, SpaceDescriptor};
use crate::squarefuncs::{g_function, g_lambda_star, lusin_area, tent_functional, LPParams};
use crate::transforms::{build_field, ConvolutionPlan};

pub const SCHEMA_VERSION: u32 = 1;

pub const OPERATORS: [&str; 8] = ["S", "g", "gstar", "tent", "maximal", "peetre", "norm", "hardy_norm"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesConfig {
    pub t_min: f64,
    pub t_max: f64,
    #[serde(rename = "J")]
    pub steps_per_octave: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peetre_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    Equivalence,
    ChangeOfAngle {
        #[serde(default = "default_alphas")]
        alphas: Vec<f64>,
    },
    Embedding {
        #[serde(default)]
        s: Option<f64>,
    },
    VanishAtInfinity {
        #[serde(default = "default_probes")]
        probes: Vec<f64>,
    },
    Decomposition,
}

fn default_alphas() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}

fn default_probes() -> Vec<f64> {
    vec![2.0, 4.0, 8.0, 16.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub grid: GridConfig,
    pub scales: ScalesConfig,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    pub space: SpaceDescriptor,
    #[serde(default)]
    pub params: OperatorParams,
    #[serde(default)]
    pub experiments: Option<Vec<ExperimentSpec>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_kernel() -> KernelKind {
    KernelKind::Annular
}

fn default_trials() -> usize {
    20
}

impl Default for RunConfig {
    fn default() -> Self {
        let h = HarnessConfig::default();
        Self {
            schema_version: SCHEMA_VERSION,
            grid: GridConfig { dim: h.grid.dim(), n: h.grid.n(), half_width: h.grid.half_width() },
            scales: ScalesConfig {
                t_min: h.scales.t_min(),
                t_max: h.scales.t_max(),
                steps_per_octave: h.scales.steps_per_octave(),
            },
            kernel: KernelKind::Annular,
            space: SpaceDescriptor::Lebesgue { p: 2.0 },
            params: OperatorParams::default(),
            experiments: None,
            trials: h.trials,
            seed: h.seed,
            output_dir: None,
        }
    }
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<LpxError> for CliError {
    fn from(e: LpxError) -> Self {
        let code = match e {
            LpxError::NonFinite(_)
            | LpxError::NoBracket
            | LpxError::ZeroDenominator
            | LpxError::DegenerateKernel(_) => 3,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A configuration that passed every precondition check.
pub struct Validated {
    pub config: RunConfig,
    pub hash: String,
    pub grid: GridSpec,
    pub scales: ScaleGrid,
    pub space: ResolvedSpace,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    /// Hash of the configuration without its output directory.
    pub fn hash(&self) -> CliResult<String> {
        let mut c = self.clone();
        c.output_dir = None;
        Ok(io::config_hash(&c)?)
    }

    pub fn validate(self) -> CliResult<Validated> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let grid = GridSpec::new(self.grid.dim, self.grid.half_width, self.grid.n)?;
        let scales = ScaleGrid::new(self.scales.t_min, self.scales.t_max, self.scales.steps_per_octave)?;
        build_kernel(self.kernel, grid)?;
        let space = self.space.resolve(&grid)?;
        let params = LPParams {
            aperture: self.params.aperture.unwrap_or(1.0),
            lambda: self.params.lambda.unwrap_or_else(|| harness::equivalence_lambda(space.floor_exponent())),
            peetre_b: self.params.peetre_b.unwrap_or_else(|| default_peetre_b(grid.dim(), space.floor_exponent())),
        };
        params.validate()?;
        if params.lambda <= 1.0 {
            return Err(LpxError::LambdaTooSmall(params.lambda).into());
        }
        if self.trials == 0 {
            return Err(CliError::config("trials must be positive"));
        }
        let hash = self.hash()?;
        Ok(Validated { config: self, hash, grid, scales, space })
    }
}

impl Validated {
    fn harness(&self) -> HarnessConfig {
        HarnessConfig { grid: self.grid, scales: self.scales.clone(), seed: self.config.seed, trials: self.config.trials }
    }

    fn lambda(&self) -> f64 {
        self.config.params.lambda.unwrap_or_else(|| harness::equivalence_lambda(self.space.floor_exponent()))
    }

    fn peetre_b(&self) -> f64 {
        self.config.params.peetre_b.unwrap_or_else(|| default_peetre_b(self.grid.dim(), self.space.floor_exponent()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "lpx", version, about = "Littlewood-Paley operators and function-space norms on periodic grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the configured kernel and its reproducing companion.
    Kernel {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply one operator to a sampled function.
    Compute {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Input function as CSV (a `<input>.json` sidecar is hash-checked if present).
        #[arg(long)]
        input: PathBuf,
        /// One of S, g, gstar, tent, maximal, peetre, norm, hardy_norm.
        #[arg(long)]
        operator: String,
    },
    /// Decompose random tent-space fields into atoms.
    Decompose {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured experiments (or the default suite).
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &Option<PathBuf>, seed: Option<u64>, out: &Option<PathBuf>) -> CliResult<(Validated, PathBuf)> {
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("lpx-out"));
    let v = cfg.validate()?;
    fs::create_dir_all(&dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    Ok((v, dir))
}

#[derive(Serialize)]
struct Provenance<'a> {
    config_hash: &'a str,
    command: &'a str,
    operator: Option<&'a str>,
    tag: &'a str,
    outputs: Vec<String>,
    value: Option<f64>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(LpxError::from)?;
    fs::write(path, text + "\n").map_err(|e| CliError::from(LpxError::from(e)))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes a function as CSV with a hash-carrying sidecar.
fn write_function(f: &SampledFunction, path: &Path, hash: &str) -> CliResult<()> {
    io::write_csv(f, path)?;
    write_json(&io::sidecar_path(path), &io::Sidecar::for_grid(f.grid(), Some(hash)))
}

fn operator_tag(op: &str) -> &'static str {
    match op {
        "S" => "lusin-area-function",
        "g" => "littlewood-paley-g-function",
        "gstar" => "g-lambda-star-function",
        "tent" => "tent-functional",
        "maximal" => "hardy-littlewood-maximal",
        "peetre" => "peetre-maximal",
        "norm" => "space-norm",
        _ => "hardy-space-norm",
    }
}

fn cmd_kernel(v: &Validated, dir: &Path) -> CliResult<()> {
    let phi = build_kernel(v.config.kernel, v.grid)?;
    let mut outputs = Vec::new();
    let mut export = |k: &crate::kernels::Kernel, stem: &str| -> CliResult<()> {
        let csv = dir.join(format!("{stem}.csv"));
        let meta = dir.join(format!("{stem}.meta.json"));
        export_kernel(k, &csv, &meta)?;
        outputs.push(file_name(&csv));
        outputs.push(file_name(&meta));
        Ok(())
    };
    export(&phi, "phi")?;
    if v.config.kernel != KernelKind::Averaging {
        let pair = calderon_companion(&phi, &v.scales)?;
        export(&pair.psi, "psi")?;
    }
    write_json(
        &dir.join("provenance.json"),
        &Provenance { config_hash: &v.hash, command: "kernel", operator: None, tag: "reproducing-pair", outputs, value: None },
    )
}

fn cmd_compute(v: &Validated, dir: &Path, input: &Path, op: &str) -> CliResult<()> {
    if !OPERATORS.contains(&op) {
        return Err(CliError::config(format!("unknown operator {op:?}; valid operators: {}", OPERATORS.join(", "))));
    }
    let sidecar = io::sidecar_path(input);
    if sidecar.exists() {
        let meta = io::read_sidecar(input)?;
        if meta.grid()? != v.grid {
            return Err(LpxError::GridMismatch.into());
        }
        if meta.config_hash.is_some() {
            meta.check_hash(&v.hash)?;
        }
    }
    let f = io::read_csv(input, &v.grid)?;
    let plan = || -> CliResult<ConvolutionPlan> {
        let kind = if v.config.kernel == KernelKind::Averaging { KernelKind::Annular } else { v.config.kernel };
        Ok(ConvolutionPlan::new(&build_kernel(kind, v.grid)?, &v.scales))
    };
    let hardy_plan = || ConvolutionPlan::new(&build_gaussian_kernel(v.grid), &v.scales);
    let output = match op {
        "S" => Some(lusin_area(&f, &plan()?)?),
        "g" => Some(g_function(&f, &plan()?)?),
        "gstar" => Some(g_lambda_star(&f, &plan()?, v.lambda())?),
        "tent" => Some(tent_functional(&build_field(&f, &plan()?)?, v.config.params.aperture.unwrap_or(1.0))?),
        "maximal" => Some(hl_maximal(&f, &BallFamily::dyadic(&v.grid))),
        "peetre" => Some(peetre_maximal(&f, &hardy_plan(), v.peetre_b())?),
        _ => None,
    };
    let (outputs, value) = match output {
        Some(out) => {
            let path = dir.join(format!("{op}.csv"));
            write_function(&out, &path, &v.hash)?;
            (vec![file_name(&path), file_name(&io::sidecar_path(&path))], None)
        }
        None => {
            let value = if op == "norm" { v.space.norm(&f)? } else { hardy_norm(&f, &v.space, &hardy_plan(), v.peetre_b())? };
            if !value.is_finite() {
                return Err(LpxError::NonFinite(0).into());
            }
            (Vec::new(), Some(value))
        }
    };
    if let Some(x) = value {
        println!("{x}");
    }
    write_json(
        &dir.join("provenance.json"),
        &Provenance { config_hash: &v.hash, command: "compute", operator: Some(op), tag: operator_tag(op), outputs, value },
    )
}

fn write_reports(reports: &[ExperimentReport], dir: &Path, hash: &str) -> CliResult<bool> {
    let mut outputs = Vec::new();
    for r in reports {
        for p in r.write(dir)? {
            outputs.push(file_name(&p));
        }
    }
    write_json(
        &dir.join("provenance.json"),
        &Provenance { config_hash: hash, command: "verify", operator: None, tag: "experiment-suite", outputs, value: None },
    )?;
    Ok(reports.iter().all(|r| r.pass))
}

fn cmd_decompose(v: &Validated, dir: &Path) -> CliResult<bool> {
    let report = harness::decomposition_experiment(&v.harness(), &v.config.space)?;
    let mut rng = harness::trial_rng(v.config.seed, 0);
    let field = harness::random_concentrated_field(&v.grid, &v.scales, 1.0, &mut rng)?;
    let atoms = crate::atoms::tent_decompose(&field, &v.space)?.summaries(&v.space)?;
    write_json(&dir.join("atoms.json"), &atoms)?;
    write_reports(&[report], dir, &v.hash)
}

fn cmd_verify(v: &Validated, dir: &Path) -> CliResult<bool> {
    let h = v.harness();
    let reports = match &v.config.experiments {
        None => harness::default_suite(&h)?,
        Some(list) => {
            let mut out = Vec::new();
            for e in list {
                out.push(match e {
                    ExperimentSpec::Equivalence => harness::equivalence_experiment(&h, &v.config.space, v.config.kernel)?,
                    ExperimentSpec::ChangeOfAngle { alphas } => {
                        harness::change_of_angle_experiment(&h, &v.config.space, alphas)?
                    }
                    ExperimentSpec::Embedding { s } => {
                        let s = s.unwrap_or_else(|| v.space.floor_exponent());
                        harness::embedding_experiment(&h, &v.config.space, s)?
                    }
                    ExperimentSpec::VanishAtInfinity { probes } => {
                        let phi = build_kernel(v.config.kernel, v.grid)?;
                        harness::vanish_at_infinity_check(&h, &harness::vanish_probe_function(&v.grid)?, &phi, probes)?
                    }
                    ExperimentSpec::Decomposition => harness::decomposition_experiment(&h, &v.config.space)?,
                });
            }
            out
        }
    };
    write_reports(&reports, dir, &v.hash)
}

/// Caps the worker pool at `LPX_THREADS` when set.
fn configure_threads() -> CliResult<()> {
    if let Ok(text) = std::env::var("LPX_THREADS") {
        let n: usize = text
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("LPX_THREADS must be a positive integer, got {text:?}")))?;
        if n == 0 {
            return Err(CliError::config("LPX_THREADS must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    configure_threads()?;
    let passed = match &cli.command {
        Command::Kernel { config, seed, out } => {
            let (v, dir) = load(config, *seed, out)?;
            cmd_kernel(&v, &dir)?;
            true
        }
        Command::Compute { config, seed, out, input, operator } => {
            let (v, dir) = load(config, *seed, out)?;
            cmd_compute(&v, &dir, input, operator)?;
            true
        }
        Command::Decompose { config, seed, out } => {
            let (v, dir) = load(config, *seed, out)?;
            cmd_decompose(&v, &dir)?
        }
        Command::Verify { config, seed, out } => {
            let (v, dir) = load(config, *seed, out)?;
            cmd_verify(&v, &dir)?
        }
    };
    Ok(if passed { 0 } else { 1 })
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
