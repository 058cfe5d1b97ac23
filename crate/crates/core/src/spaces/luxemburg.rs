//! Luxemburg norms `inf { lambda : modular(lambda) <= 1 }` by log-space bisection.

use crate::error::{LpxError, Result};

pub const MAX_ITERATIONS: usize = 200;
pub const BRACKET: f64 = 1e30;
const RELATIVE_WIDTH: f64 = 1e-13;

/// Root of a nonincreasing modular in `[scale / BRACKET, scale * BRACKET]`.
///
/// `scale` is usually `||f||_inf`; a zero scale means `f = 0` and yields 0.
pub fn luxemburg(scale: f64, modular: impl Fn(f64) -> f64) -> Result<f64> {
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut lo = scale / BRACKET;
    let mut hi = scale * BRACKET;
    if !(modular(lo) >= 1.0) || modular(hi) > 1.0 {
        return Err(LpxError::NoBracket);
    }
    for _ in 0..MAX_ITERATIONS {
        if hi / lo - 1.0 <= RELATIVE_WIDTH {
            break;
        }
        let mid = (lo * hi).sqrt();
        if modular(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
