//! Quantized matrix multiplication and weight-only quantization: scalar and
//! lattice quantizers, successive-interference-cancellation weight
//! quantizers, and the rate-distortion curves they are measured against.

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod formats;
pub mod grid;
pub mod hadamard;
pub mod io;
pub mod lattice;
pub mod matrix;
pub mod rng;
pub mod sic;
pub mod wmse;

pub use error::{QmmError, Result};
pub use matrix::Matrix;
pub use rng::SeededRng;
