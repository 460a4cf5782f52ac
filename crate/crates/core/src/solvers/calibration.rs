//! Empirical constants for the linear and bilinear solution-space bounds.

use serde::Serialize;

use super::bilinear::System;
use super::pipeline::{Solver, SolverConfig};
use crate::error::Result;
use crate::estimates::trial_spectrum;
use crate::heat::heat_propagate;
use crate::parallel;
use crate::random::{random_field, random_solenoidal, trial_seed, Support};
use crate::spectral::SpectralField;
use crate::timeseries::TimeSeriesField;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantFit {
    pub ratios: Vec<f64>,
    /// Largest ratio seen.
    pub constant: f64,
}

impl ConstantFit {
    fn from_ratios(ratios: Vec<f64>) -> Self {
        let constant = ratios.iter().cloned().fold(0.0, f64::max);
        Self { ratios, constant }
    }
}

/// Random band-limited data for trial `index`.
pub fn trial_data(solver: &Solver, index: usize, seed: u64) -> Result<SpectralField> {
    let (_, hi) = solver.part().covered_band();
    let support = Support::new(1.0, hi);
    let spectrum = trial_spectrum(index);
    let mut u = match solver.config.system {
        System::NavierStokes => random_solenoidal(solver.grid, support, spectrum, seed)?,
        System::KellerSegel => random_field(solver.grid, 1, support, spectrum, seed),
    };
    solver.op.truncate(&mut u);
    Ok(u)
}

fn trial_flow(solver: &Solver, index: usize, seed: u64) -> Result<TimeSeriesField> {
    heat_propagate(&trial_data(solver, index, seed)?, solver.times())
}

/// max over random pairs of ‖B(u, v)‖ / (‖u‖‖v‖), u and v heat flows.
pub fn fit_bilinear_constant(solver: &Solver, trials: usize, seed: u64) -> Result<ConstantFit> {
    let ratios = parallel::map_range(trials, |i| -> Result<f64> {
        let s = trial_seed(seed, i as u64);
        let u = trial_flow(solver, i, s)?;
        let v = trial_flow(solver, i + 1, s.rotate_left(17) ^ 0xb5ad_4ece)?;
        let b = solver.bilinear(&u, &v)?;
        Ok(solver.space.norm(&b)? / (solver.space.norm(&u)? * solver.space.norm(&v)?))
    });
    Ok(ConstantFit::from_ratios(ratios.into_iter().collect::<Result<_>>()?))
}

/// max over random data of ‖e^{tΔ}u₀‖ / ‖u₀‖ in the critical data norm.
pub fn fit_linear_constant(solver: &Solver, trials: usize, seed: u64) -> Result<ConstantFit> {
    let ratios = parallel::map_range(trials, |i| -> Result<f64> {
        let u0 = trial_data(solver, i, trial_seed(seed, i as u64))?;
        let flow = heat_propagate(&u0, solver.times())?;
        Ok(solver.space.norm(&flow)? / solver.space.data_norm(&u0)?)
    });
    Ok(ConstantFit::from_ratios(ratios.into_iter().collect::<Result<_>>()?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallnessReport {
    pub system: System,
    pub trials: usize,
    pub seed: u64,
    pub linear: ConstantFit,
    pub bilinear: ConstantFit,
    /// ε = 1/(4 C₁ C₂).
    pub epsilon: f64,
}

pub fn epsilon_from(c1: f64, c2: f64) -> f64 {
    1.0 / (4.0 * c1 * c2)
}

/// Data-smallness threshold ε = 1/(4 C₁ C₂) with both constants fitted.
pub fn smallness_threshold(config: &SolverConfig, trials: usize) -> Result<SmallnessReport> {
    let solver = Solver::new(config.clone())?;
    let linear = fit_linear_constant(&solver, trials, config.seed)?;
    let bilinear = fit_bilinear_constant(&solver, trials, config.seed)?;
    Ok(SmallnessReport {
        system: config.system,
        trials,
        seed: config.seed,
        epsilon: epsilon_from(linear.constant, bilinear.constant),
        linear,
        bilinear,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::TimeGrid;

    #[test]
    fn toy_constants() {
        assert_eq!(epsilon_from(1.0, 1.0), 0.25);
    }

    #[test]
    fn more_trials_never_raise_epsilon() {
        let mut c = SolverConfig::new(System::KellerSegel, 16);
        c.times = TimeGrid::geometric(1.0, 16, 1.2).unwrap();
        let a = smallness_threshold(&c, 3).unwrap();
        let b = smallness_threshold(&c, 5).unwrap();
        assert_eq!(&b.bilinear.ratios[..3], &a.bilinear.ratios[..]);
        assert!(b.epsilon <= a.epsilon);
        assert!(a.epsilon > 0.0 && a.epsilon.is_finite());
    }
}
