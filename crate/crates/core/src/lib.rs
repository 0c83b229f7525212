//! Work statistics of a driven two-level system under the two-point
//! measurement scheme, with optional counter-diabatic driving and readout
//! error correction.

// Tolerance checks are written `!(x <= tol)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod output;
pub mod protocol;
pub mod readout;
pub mod sampling;
pub mod tpm;

pub use error::{Error, Result};
