//! Exact heat propagator, exponential-integrator Duhamel sums and the
//! linear heat estimate.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::Regularity;
use crate::littlewood_paley::DyadicPartition;
use crate::norms::{chemin_lerner_norm, variable_fourier_besov_norm, Comparison, Integrability};
use crate::parallel;
use crate::spectral::SpectralField;
use crate::timeseries::{Quadrature, TimeGrid, TimeSeriesField};

/// On supp φⱼ, |ξ|² ≥ κ 2^{2j} with κ = (3/4)².
pub const KAPPA: f64 = 9.0 / 16.0;

fn check_mean(u: &SpectralField) -> Result<()> {
    if u.zero_mode() != 0.0 {
        return Err(Error::NonzeroMean(u.zero_mode()));
    }
    Ok(())
}

/// e^{-t|ξ|²} û₀ at one time.
pub fn heat_at(u0: &SpectralField, t: f64) -> SpectralField {
    let grid = u0.grid();
    let lattice = grid.lattice();
    let len = grid.len();
    let mut out = u0.clone();
    parallel::for_each_chunk_mut(out.data_mut(), len, |_, comp| {
        for (z, r) in comp.iter_mut().zip(&lattice.radii) {
            *z *= (-t * r * r).exp();
        }
    });
    out
}

/// e^{tΔ}u₀ at every node.
pub fn heat_propagate(u0: &SpectralField, times: &TimeGrid) -> Result<TimeSeriesField> {
    check_mean(u0)?;
    let snaps = parallel::map_slice(times.times(), |&t| heat_at(u0, t));
    TimeSeriesField::new(times.clone(), snaps, Quadrature::default())
}

/// ∫₀^{t_k} e^{(t_k-τ)Δ} f(τ) dτ at every node k.
///
/// On [t_k, t_{k+1}] the forcing is held at its trapezoid mean and the
/// kernel is integrated exactly:
/// w_{k+1} = e^{-h|ξ|²} w_k + (1 - e^{-h|ξ|²})/|ξ|² · (f_k + f_{k+1})/2.
pub fn duhamel_series(f: &TimeSeriesField) -> TimeSeriesField {
    let grid = f.grid();
    let lattice = grid.lattice();
    let len = grid.len();
    let t = f.times.times();
    let mut snaps = Vec::with_capacity(t.len());
    let mut w = SpectralField::zeros(grid, f.components());
    snaps.push(w.clone());
    for k in 0..t.len() - 1 {
        let h = t[k + 1] - t[k];
        let fa = &f.snapshots[k];
        let fb = &f.snapshots[k + 1];
        let comps_a: Vec<&[Complex64]> = (0..f.components()).map(|c| fa.component(c)).collect();
        let comps_b: Vec<&[Complex64]> = (0..f.components()).map(|c| fb.component(c)).collect();
        parallel::for_each_chunk_mut(w.data_mut(), len, |c, comp| {
            let (a, b) = (comps_a[c], comps_b[c]);
            for (i, z) in comp.iter_mut().enumerate() {
                let r2 = lattice.radii[i] * lattice.radii[i];
                let decay = (-h * r2).exp();
                let gain = if r2 == 0.0 { h } else { -(-h * r2).exp_m1() / r2 };
                *z = *z * decay + (a[i] + b[i]) * (0.5 * gain);
            }
        });
        snaps.push(w.clone());
    }
    TimeSeriesField {
        times: f.times.clone(),
        snapshots: snaps,
        quadrature: f.quadrature,
    }
}

/// Duhamel integral at a single node.
pub fn duhamel(f: &TimeSeriesField, t_index: usize) -> Result<SpectralField> {
    if t_index >= f.times.len() {
        return Err(Error::InvalidTimeGrid(format!(
            "node {t_index} outside grid of {} nodes",
            f.times.len()
        )));
    }
    let truncated = TimeSeriesField::new(
        TimeGrid::new(f.times.times()[..=t_index.max(1)].to_vec())?,
        f.snapshots[..=t_index.max(1)].to_vec(),
        f.quadrature,
    )?;
    Ok(duhamel_series(&truncated).snapshots.swap_remove(t_index))
}

/// Heat solution u = e^{tΔ}u₀ + ∫ e^{(t-τ)Δ}f.
#[derive(Debug, Clone)]
pub struct HeatSolution {
    pub series: TimeSeriesField,
    pub u0: SpectralField,
    pub forcing: Option<TimeSeriesField>,
    pub kappa: f64,
}

pub fn solve_heat(u0: &SpectralField, forcing: Option<&TimeSeriesField>, times: &TimeGrid) -> Result<HeatSolution> {
    let mut series = heat_propagate(u0, times)?;
    if let Some(f) = forcing {
        if f.times != *times {
            return Err(Error::InvalidTimeGrid("forcing lives on a different time grid".into()));
        }
        series.axpy(1.0, &duhamel_series(f))?;
    }
    Ok(HeatSolution {
        series,
        u0: u0.clone(),
        forcing: forcing.cloned(),
        kappa: KAPPA,
    })
}

/// Indices of the heat estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatIndices {
    pub s: Regularity,
    pub p: Integrability,
    pub r: f64,
    pub rho: f64,
    pub rho1: f64,
}

/// LHS ‖u‖_{𝓛^{ρ₁}(FḂ^{s+2/ρ₁}_{p,r})} against
/// RHS ‖u₀‖_{FḂ^s_{p,r}} + ‖f‖_{𝓛^ρ(FḂ^{s+2/ρ-2}_{p,r})}.
pub fn verify_heat_estimate(
    u0: &SpectralField,
    forcing: Option<&TimeSeriesField>,
    idx: &HeatIndices,
    times: &TimeGrid,
    part: &DyadicPartition,
) -> Result<Comparison> {
    if !(idx.rho >= 1.0 && idx.rho1 >= idx.rho) {
        return Err(Error::Hypothesis(format!(
            "need rho1 >= rho >= 1 (got rho = {}, rho1 = {})",
            idx.rho, idx.rho1
        )));
    }
    let sol = solve_heat(u0, forcing, times)?;
    let lhs = chemin_lerner_norm(
        &sol.series,
        idx.rho1,
        &idx.s.shifted(2.0 / idx.rho1),
        &idx.p,
        idx.r,
        part,
    )?
    .value;
    let mut rhs = variable_fourier_besov_norm(u0, &idx.s, &idx.p, &Integrability::Constant(idx.r), part)?.value;
    if let Some(f) = forcing {
        rhs += chemin_lerner_norm(f, idx.rho, &idx.s.shifted(2.0 / idx.rho - 2.0), &idx.p, idx.r, part)?.value;
    }
    Ok(Comparison { lhs, rhs })
}

/// min over supp φⱼ of |ξ|²/2^{2j}, for every covered j.
pub fn kappa_bounds(part: &DyadicPartition) -> Vec<(i32, f64)> {
    let lattice = part.grid.lattice();
    part.range()
        .map(|j| {
            let table = part.block_table(j).expect("j in range");
            let scale = 4f64.powi(j);
            let m = table
                .iter()
                .map(|&(i, _)| lattice.radii[i] * lattice.radii[i] / scale)
                .fold(f64::INFINITY, f64::min);
            (j, m)
        })
        .collect()
}
