//! Mild-solution pipelines: free part, Picard iteration in the solution
//! space, and the verdicts recorded for each run.

use serde::Serialize;

use super::bilinear::{bilinear_series, Nonlinearity, System, SOLENOIDAL_TOL};
use super::calibration::fit_bilinear_constant;
use super::picard::{picard_solve, PicardOptions, PicardProblem, PicardTrace};
use crate::error::{Error, Result};
use crate::estimates::BoundCheck;
use crate::exponents::{ExponentField, ExponentRecipe, Regularity};
use crate::heat::{duhamel_series, heat_propagate, KAPPA};
use crate::littlewood_paley::{build_partition, DyadicPartition};
use crate::norms::{chemin_lerner_norm, variable_fourier_besov_norm, Integrability};
use crate::spectral::{divergence_residual, leray_project, GridSpec, SpectralField};
use crate::timeseries::{TimeGrid, TimeSeriesField};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub system: System,
    pub n: usize,
    #[serde(skip)]
    pub times: TimeGrid,
    pub p: ExponentRecipe,
    pub rho: f64,
    pub dealias: bool,
    /// Smallness level; `None` takes η = 1/(8 C_fit).
    pub eta: Option<f64>,
    /// Bilinear constant; `None` calibrates it.
    pub c_fit: Option<f64>,
    pub max_iterations: usize,
    pub contraction_tolerance: f64,
    pub calibration_trials: usize,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(system: System, n: usize) -> Self {
        Self {
            system,
            n,
            times: TimeGrid::default_grid(),
            p: ExponentRecipe::Constant { p: 3.0 },
            rho: 2.0,
            dealias: false,
            eta: None,
            c_fit: None,
            max_iterations: 60,
            contraction_tolerance: 1e-10,
            calibration_trials: 12,
            seed: 0x5eed_0001,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.rho >= 1.0) {
            errs.push(format!("rho must be at least 1 (got {})", self.rho));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) {
                errs.push(format!("eta must be positive (got {eta})"));
            }
        }
        if let Some(c) = self.c_fit {
            if !(c > 0.0) {
                errs.push(format!("c_fit must be positive (got {c})"));
            }
        }
        if !(self.contraction_tolerance > 0.0) {
            errs.push("contraction_tolerance must be positive".into());
        }
        if self.max_iterations == 0 {
            errs.push("max_iterations must be positive".into());
        }
        if self.calibration_trials == 0 && self.c_fit.is_none() {
            errs.push("calibration_trials must be positive when c_fit is not given".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// The three component norms of the solution space and the data norm.
#[derive(Debug, Clone)]
pub struct SolutionSpace {
    pub system: System,
    pub part: DyadicPartition,
    pub p: ExponentField,
    pub rho: f64,
}

impl SolutionSpace {
    fn integrability(&self) -> Integrability {
        if self.p.is_constant() {
            Integrability::Constant(self.p.p_minus())
        } else {
            Integrability::Variable(self.p.clone())
        }
    }

    /// Critical offset: 2 for Navier-Stokes, 1 for Keller-Segel.
    fn offset(&self) -> f64 {
        match self.system {
            System::NavierStokes => 2.0,
            System::KellerSegel => 1.0,
        }
    }

    /// L¹ and L^∞ regularities of the two L² components.
    fn l2_indices(&self) -> (f64, f64) {
        match self.system {
            System::NavierStokes => (2.5, 0.5),
            System::KellerSegel => (1.5, -0.5),
        }
    }

    pub fn component_names(&self) -> [String; 3] {
        let (a, b) = self.l2_indices();
        [
            format!("L^{}_t FB^({} - 3/p + 2/{})_(p,1)", self.rho, self.offset(), self.rho),
            format!("L^1_t FB^({a})_(2,1)"),
            format!("L^inf_t FB^({b})_(2,1)"),
        ]
    }

    pub fn components(&self, u: &TimeSeriesField) -> Result<[f64; 3]> {
        let part = &self.part;
        let s = Regularity::affine_in_reciprocal(self.offset() + 2.0 / self.rho, -3.0, &self.p);
        let first = chemin_lerner_norm(u, self.rho, &s, &self.integrability(), 1.0, part)?.value;
        let (a, b) = self.l2_indices();
        let two = Integrability::Constant(2.0);
        let second = chemin_lerner_norm(u, 1.0, &Regularity::Constant(a), &two, 1.0, part)?.value;
        let third = chemin_lerner_norm(u, f64::INFINITY, &Regularity::Constant(b), &two, 1.0, part)?.value;
        Ok([first, second, third])
    }

    /// max of the three components.
    pub fn norm(&self, u: &TimeSeriesField) -> Result<f64> {
        Ok(self.components(u)?.into_iter().fold(0.0, f64::max))
    }

    /// ‖u₀‖_{FḂ^{c - 3/p(·)}_{p(·),1}}.
    pub fn data_norm(&self, u0: &SpectralField) -> Result<f64> {
        let s = Regularity::affine_in_reciprocal(self.offset(), -3.0, &self.p);
        Ok(
            variable_fourier_besov_norm(u0, &s, &self.integrability(), &Integrability::Constant(1.0), &self.part)?
                .value,
        )
    }

    /// e^{-κ 2^{2 j_min} T}: what the L¹ tails beyond T can contribute, relative.
    pub fn tail_bound(&self, horizon: f64) -> f64 {
        (-KAPPA * 4f64.powi(self.part.j_min) * horizon).exp()
    }
}

/// Everything one system needs to evaluate B and the norms.
#[derive(Debug, Clone)]
pub struct Solver {
    pub config: SolverConfig,
    pub grid: GridSpec,
    pub space: SolutionSpace,
    pub op: Nonlinearity,
}

/// The signed form entering u = y + B(u, u).
struct Problem<'a> {
    solver: &'a Solver,
}

impl PicardProblem for Problem<'_> {
    type State = TimeSeriesField;

    fn bilinear(&self, u: &TimeSeriesField, v: &TimeSeriesField) -> Result<TimeSeriesField> {
        self.solver.bilinear(u, v)
    }

    fn add(&self, a: &TimeSeriesField, b: &TimeSeriesField) -> TimeSeriesField {
        a.add(b).expect("same grid")
    }

    fn sub(&self, a: &TimeSeriesField, b: &TimeSeriesField) -> TimeSeriesField {
        a.sub(b).expect("same grid")
    }

    fn norm(&self, u: &TimeSeriesField) -> f64 {
        self.solver.space.norm(u).unwrap_or(f64::NAN)
    }
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = GridSpec::cube(config.n)?;
        let part = build_partition(grid)?;
        let p = ExponentField::from_recipe(config.p.clone(), grid)?;
        p.check_solver_window()?;
        let op = Nonlinearity::new(config.system, &part, config.dealias)?;
        let space = SolutionSpace {
            system: config.system,
            part,
            p,
            rho: config.rho,
        };
        Ok(Self {
            config,
            grid,
            space,
            op,
        })
    }

    pub fn times(&self) -> &TimeGrid {
        &self.config.times
    }

    pub fn part(&self) -> &DyadicPartition {
        &self.space.part
    }

    /// -B₁(u, v) for Navier-Stokes, +B₂(u, v) for Keller-Segel.
    pub fn bilinear(&self, u: &TimeSeriesField, v: &TimeSeriesField) -> Result<TimeSeriesField> {
        let b = bilinear_series(&self.op, u, v)?;
        Ok(match self.config.system {
            System::NavierStokes => b.scaled(-1.0),
            System::KellerSegel => b,
        })
    }

    /// Check and truncate initial data. Returns the truncated field and the
    /// relative energy removed.
    pub fn prepare_data(&self, u0: &SpectralField) -> Result<(SpectralField, f64)> {
        let comps = self.config.system.components();
        if u0.components() != comps {
            return Err(Error::ComponentMismatch {
                expected: comps,
                found: u0.components(),
            });
        }
        if u0.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "data on n = {}, solver on n = {}",
                u0.grid().n,
                self.grid.n
            )));
        }
        if u0.zero_mode() != 0.0 {
            return Err(Error::NonzeroMean(u0.zero_mode()));
        }
        if self.config.system == System::NavierStokes {
            let r = divergence_residual(u0);
            if r > SOLENOIDAL_TOL {
                return Err(Error::NotSolenoidal(r));
            }
        }
        let mut out = u0.clone();
        self.op.truncate(&mut out);
        let e = u0.energy();
        let removed = if e > 0.0 { u0.sub(&out)?.energy() / e } else { 0.0 };
        Ok((out, removed))
    }

    /// y = e^{tΔ}u₀ + ∫e^{(t-τ)Δ}(P)f.
    pub fn free_part(&self, u0: &SpectralField, forcing: Option<&TimeSeriesField>) -> Result<TimeSeriesField> {
        let (u0, _) = self.prepare_data(u0)?;
        let mut y = heat_propagate(&u0, self.times())?;
        if let Some(f) = forcing {
            if f.times != *self.times() {
                return Err(Error::InvalidTimeGrid("forcing lives on a different time grid".into()));
            }
            let mut g = match self.config.system {
                System::NavierStokes => {
                    let snaps = f.snapshots.iter().map(leray_project).collect::<Result<Vec<_>>>()?;
                    TimeSeriesField::new(f.times.clone(), snaps, f.quadrature)?
                }
                System::KellerSegel => f.clone(),
            };
            for s in &mut g.snapshots {
                if s.components() != self.config.system.components() {
                    return Err(Error::ComponentMismatch {
                        expected: self.config.system.components(),
                        found: s.components(),
                    });
                }
                if s.zero_mode() != 0.0 {
                    return Err(Error::NonzeroMean(s.zero_mode()));
                }
                self.op.truncate(s);
            }
            y.axpy(1.0, &duhamel_series(&g))?;
        }
        Ok(y)
    }

    pub fn c_fit(&self) -> Result<f64> {
        match self.config.c_fit {
            Some(c) => Ok(c),
            None => Ok(fit_bilinear_constant(self, self.config.calibration_trials, self.config.seed)?.constant),
        }
    }

    pub fn eta(&self, c_fit: f64) -> f64 {
        self.config.eta.unwrap_or(1.0 / (8.0 * c_fit))
    }

    pub fn options(&self) -> PicardOptions {
        PicardOptions {
            max_iterations: self.config.max_iterations,
            tolerance: self.config.contraction_tolerance,
        }
    }

    /// Picard iteration from `start` (default y).
    pub fn iterate(
        &self,
        y: &TimeSeriesField,
        start: Option<&TimeSeriesField>,
    ) -> Result<(TimeSeriesField, PicardTrace)> {
        let out = picard_solve(&Problem { solver: self }, y, self.options(), start)?;
        Ok((out.solution, out.trace))
    }

    /// ‖u - y - B(u, u)‖ in the solution space.
    pub fn residual(&self, u: &TimeSeriesField, y: &TimeSeriesField) -> Result<f64> {
        let mut r = u.sub(y)?;
        r.axpy(-1.0, &self.bilinear(u, u)?)?;
        self.space.norm(&r)
    }

    /// Solve and assemble the record.
    pub fn solve(&self, u0: &SpectralField, forcing: Option<&TimeSeriesField>) -> Result<RunOutput> {
        let (_, removed) = self.prepare_data(u0)?;
        let y = self.free_part(u0, forcing)?;
        let c_fit = self.c_fit()?;
        self.solve_free(&y, c_fit, removed)
    }

    /// Solve from a prepared free part.
    pub fn solve_free(&self, y: &TimeSeriesField, c_fit: f64, removed_energy: f64) -> Result<RunOutput> {
        let eta = self.eta(c_fit);
        let y_norm = self.space.norm(y)?;
        let certified = y_norm <= eta && 4.0 * eta * c_fit < 1.0;
        let (u, trace) = self.iterate(y, None)?;
        let final_norms = self.space.components(&u)?;
        let final_norm = final_norms.iter().cloned().fold(0.0, f64::max);
        let tol = self.config.contraction_tolerance;
        let residual = self.residual(&u, y)?;

        let mut verdicts = vec![BoundCheck::at_most("residual <= 10 x tolerance", residual, 10.0 * tol)];
        let mut notes = Vec::new();
        if certified {
            verdicts.push(BoundCheck::at_most(
                "final norm <= 2 eta + 1e-6",
                final_norm,
                2.0 * eta + 1e-6,
            ));
            let rate = trace.tail_rate(tol).unwrap_or(0.0);
            verdicts.push(BoundCheck::at_most(
                "contraction rate <= 4 eta C_fit + 0.05",
                rate,
                4.0 * eta * c_fit + 0.05,
            ));
        } else {
            notes.push("outside smallness regime: bounds recorded, not asserted".into());
        }
        match self.config.system {
            System::NavierStokes => {
                let worst = u.snapshots.iter().map(divergence_residual).fold(0.0, f64::max);
                verdicts.push(BoundCheck::at_most(
                    "divergence residual at every node",
                    worst,
                    SOLENOIDAL_TOL,
                ));
            }
            System::KellerSegel => {
                let worst = u.snapshots.iter().map(|s| s.zero_mode()).fold(0.0, f64::max);
                verdicts.push(BoundCheck::at_most("zero mode at every node", worst, 0.0));
            }
        }
        if removed_energy > 0.0 {
            notes.push(format!(
                "data truncated to the solver band; relative energy removed {removed_energy:.3e}"
            ));
        }
        let passes = trace.converged && verdicts.iter().all(|c| c.passes);
        let record = RunRecord {
            system: self.config.system,
            config: self.config.clone(),
            time_grid: self.times().describe().to_string(),
            p_bounds: (self.space.p.p_minus(), self.space.p.p_plus()),
            j_range: (self.part().j_min, self.part().j_max),
            c_fit,
            eta,
            free_norm: y_norm,
            certified,
            regime: if certified {
                "certified"
            } else {
                "outside smallness regime"
            }
            .into(),
            iterate_norms: trace.iterate_norms.clone(),
            differences: trace.differences.clone(),
            contraction_rates: trace.rates.clone(),
            converged: trace.converged,
            component_names: self.space.component_names(),
            final_norms,
            final_norm,
            residual,
            tail_bound: self.space.tail_bound(self.times().horizon()),
            verdicts,
            notes,
            passes,
        };
        Ok(RunOutput {
            record,
            solution: u,
            free: y.clone(),
            trace,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub system: System,
    pub config: SolverConfig,
    pub time_grid: String,
    pub p_bounds: (f64, f64),
    pub j_range: (i32, i32),
    pub c_fit: f64,
    pub eta: f64,
    /// ‖y‖ of the free part.
    pub free_norm: f64,
    pub certified: bool,
    pub regime: String,
    pub iterate_norms: Vec<f64>,
    pub differences: Vec<f64>,
    pub contraction_rates: Vec<f64>,
    pub converged: bool,
    pub component_names: [String; 3],
    pub final_norms: [f64; 3],
    pub final_norm: f64,
    pub residual: f64,
    pub tail_bound: f64,
    pub verdicts: Vec<BoundCheck>,
    pub notes: Vec<String>,
    pub passes: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub solution: TimeSeriesField,
    pub free: TimeSeriesField,
    pub trace: PicardTrace,
}

pub fn solve_ns(u0: &SpectralField, forcing: Option<&TimeSeriesField>, config: SolverConfig) -> Result<RunOutput> {
    if config.system != System::NavierStokes {
        return Err(Error::Config(vec!["solve_ns needs system = navier-stokes".into()]));
    }
    Solver::new(config)?.solve(u0, forcing)
}

pub fn solve_ks(u0: &SpectralField, forcing: Option<&TimeSeriesField>, config: SolverConfig) -> Result<RunOutput> {
    if config.system != System::KellerSegel {
        return Err(Error::Config(vec!["solve_ks needs system = keller-segel".into()]));
    }
    Solver::new(config)?.solve(u0, forcing)
}

/// Outcome of rerunning with perturbed data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityCheck {
    pub data_distance: f64,
    pub solution_distance: f64,
    /// ‖y - ỹ‖/(1 - 4ηC) with 10% slack.
    pub bound: f64,
    pub passes: bool,
}

/// Compare two certified solutions against the continuity estimate.
pub fn continuity_check(
    solver: &Solver,
    y: &TimeSeriesField,
    u: &TimeSeriesField,
    y2: &TimeSeriesField,
    u2: &TimeSeriesField,
    eta: f64,
    c_fit: f64,
) -> Result<ContinuityCheck> {
    let data_distance = solver.space.norm(&y.sub(y2)?)?;
    let solution_distance = solver.space.norm(&u.sub(u2)?)?;
    let bound = 1.1 * data_distance / (1.0 - 4.0 * eta * c_fit) + solver.config.contraction_tolerance;
    Ok(ContinuityCheck {
        data_distance,
        solution_distance,
        bound,
        passes: solution_distance <= bound,
    })
}
