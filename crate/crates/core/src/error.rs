use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpxError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid scale grid: {0}")]
    InvalidScales(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("grids differ")]
    GridMismatch,
    #[error("Nyquist frequency {nyquist} is below the required {required}")]
    DualRangeTooSmall { nyquist: f64, required: f64 },
    #[error("kernel normalization constant {0} is degenerate")]
    DegenerateKernel(f64),
    #[error("companion construction requires a radial kernel")]
    NotRadial,
    #[error("band coverage {coverage} below {required} at frequency {frequency}")]
    BandCoverage {
        coverage: f64,
        required: f64,
        frequency: f64,
    },
    #[error("scale {t} outside [{t_min}, {t_max}]")]
    ScaleOutOfRange { t: f64, t_min: f64, t_max: f64 },
    #[error("lambda must exceed 1, got {0}")]
    LambdaTooSmall(f64),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("modular never crosses 1 inside the bisection bracket")]
    NoBracket,
    #[error("no exponent q <= 64 gives a stable A_q characteristic")]
    NotInAInfty,
    #[error("cone of aperture {alpha} leaves the concentration box")]
    ConeOverflow { alpha: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LpxError>;
