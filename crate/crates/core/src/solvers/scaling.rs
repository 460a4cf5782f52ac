//! Critical-norm invariance under the natural rescaling of each system.
//!
//! u_λ(x) = λ^a u(λx) has û_λ(ξ) = λ^{a-n} û(ξ/λ): the coefficient at
//! lattice point ξ moves to radius λ|ξ|, and each point now stands for a
//! cell of volume λ^n. With a = 1 (Navier-Stokes) and s = 2 - 3/p, or
//! a = 2 (Keller-Segel) and s = 1 - 3/p, the FḂ^s_{p,1} norm is unchanged.

use serde::Serialize;

use super::bilinear::System;
use crate::error::{Error, Result};
use crate::littlewood_paley::DyadicPartition;
use crate::norms::sample_besov_norm;
use crate::spectral::SpectralField;

/// Tolerance of the invariance check.
pub const SCALING_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub system: System,
    pub lambda: f64,
    pub p: f64,
    pub s: f64,
    pub original: f64,
    pub rescaled: f64,
    pub relative_difference: f64,
    pub passes: bool,
}

fn law(system: System) -> (f64, f64) {
    // (amplitude power a, offset c in s = c - n/p)
    match system {
        System::NavierStokes => (1.0, 2.0),
        System::KellerSegel => (2.0, 1.0),
    }
}

pub fn scaling_check(
    system: System,
    lambda: f64,
    field: &SpectralField,
    p: f64,
    part: &DyadicPartition,
) -> Result<ScalingReport> {
    if !(lambda >= 1.0) || lambda.log2().fract() != 0.0 {
        return Err(Error::Hypothesis(format!(
            "lambda must be a power of two (got {lambda})"
        )));
    }
    if !part.is_band_covered(field) {
        let (lo, hi) = part.covered_band();
        return Err(Error::BandOverflow(format!(
            "field support leaves the covered band [{lo}, {hi}]"
        )));
    }
    let grid = field.grid();
    let n = grid.dims as f64;
    let (a, c) = law(system);
    let s = c - n / p;
    let lattice = grid.lattice();
    let samples: Vec<(f64, f64)> = (0..grid.len())
        .map(|i| (lattice.radii[i], field.magnitude(i)))
        .collect();
    let original = sample_besov_norm(&samples, 1.0, s, p, 1.0, part);
    let amp = lambda.powf(a - n);
    let moved: Vec<(f64, f64)> = samples.iter().map(|&(r, m)| (lambda * r, amp * m)).collect();
    let rescaled = sample_besov_norm(&moved, lambda.powf(n), s, p, 1.0, part);
    let relative_difference = if original > 0.0 {
        (rescaled - original).abs() / original
    } else {
        rescaled.abs()
    };
    Ok(ScalingReport {
        system,
        lambda,
        p,
        s,
        original,
        rescaled,
        relative_difference,
        passes: relative_difference <= SCALING_TOL,
    })
}
