//! Variable-exponent Fourier-Besov analysis on the periodic torus.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod error;
pub mod estimates;
pub mod exponents;
pub mod heat;
pub mod littlewood_paley;
pub mod norms;
pub mod parallel;
pub mod random;
pub mod report;
pub mod solvers;
pub mod spectral;
pub mod timeseries;

pub use error::{Error, Result};
