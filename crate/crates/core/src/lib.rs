//! Joint pilot and analog-combiner design for uplink channel estimation in
//! a cell-free C-RAN whose remote radio heads use few RF chains and one-bit
//! ADCs.
//!
//! The crate models the full pilot-transmission chain (correlated channels,
//! analog combining, sign quantization), linearizes the quantizer exactly
//! for Gaussian inputs, evaluates per-UE and sum MSE both analytically and
//! by Monte-Carlo simulation, and optimizes pilots plus combiners by
//! alternating convex surrogates. A separate high-resolution noiseless path
//! provides the decomposed sum-MSE and the trace-ratio design heuristics.
//!
//! Monte-Carlo loops fan out on rayon when the `parallel` feature (default)
//! is enabled; the sequential fallback produces bit-identical results.

pub mod bussgang;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod frontend;
pub mod linalg;
pub mod optimizer;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use num_complex::Complex64;
