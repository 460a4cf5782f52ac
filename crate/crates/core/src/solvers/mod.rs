//! Navier-Stokes and Keller-Segel mild solutions by Picard iteration.

pub mod bilinear;
pub mod calibration;
pub mod picard;
pub mod pipeline;
pub mod scaling;

pub use bilinear::{ks_bilinear, ks_direct_form, ks_symmetric_form, ns_bilinear, Nonlinearity, System};
pub use calibration::{fit_bilinear_constant, fit_linear_constant, smallness_threshold, SmallnessReport};
pub use picard::{picard_solve, PicardOptions, PicardTrace};
pub use pipeline::{continuity_check, solve_ks, solve_ns, RunOutput, RunRecord, SolutionSpace, Solver, SolverConfig};
pub use scaling::{scaling_check, ScalingReport};
