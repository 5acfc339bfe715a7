//! Finite-precision dense Hermitian linear algebra.
//!
//! Every algorithm runs either in native `f64` or under an emulated
//! significand width, and checks the precision its error bound needs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chol;
pub mod dft;
pub mod error;
pub mod fparith;
pub mod generate;
pub mod matcore;
pub mod oracle;
pub mod shatter;
pub mod signfn;
pub mod spectra;

pub use error::{Error, Result};
pub use fparith::{PrecisionBudget, StabilityConstants};
pub use matcore::{Machine, Mat, MulBackend, OpReport, C64};
