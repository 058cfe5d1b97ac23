// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atoms;
pub mod cli;
pub mod error;
mod fft;
pub mod grid;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod maximal;
pub mod spaces;
pub mod squarefuncs;
mod stencil;
pub mod transforms;

pub use error::{LpxError, Result};
