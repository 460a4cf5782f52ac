//! Fixed-point iteration u = y + B(u, u) for a bounded bilinear B.

use serde::Serialize;

use crate::error::{Error, Result};

/// A solution space with a bilinear form acting on it.
pub trait PicardProblem {
    type State: Clone;

    /// Symmetrized bilinear form B(u, v).
    fn bilinear(&self, u: &Self::State, v: &Self::State) -> Result<Self::State>;
    fn add(&self, a: &Self::State, b: &Self::State) -> Self::State;
    fn sub(&self, a: &Self::State, b: &Self::State) -> Self::State;
    /// Solution-space norm.
    fn norm(&self, u: &Self::State) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            max_iterations: 60,
            tolerance: 1e-10,
        }
    }
}

/// Per-iterate diagnostics. `iterate_norms[0]` is the starting iterate;
/// `differences[n]` is ‖u^{n+1} - u^n‖ and `rates[n]` its ratio to the
/// previous difference (absent for the first step).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PicardTrace {
    pub iterate_norms: Vec<f64>,
    pub differences: Vec<f64>,
    pub rates: Vec<f64>,
    pub converged: bool,
}

impl PicardTrace {
    pub fn iterations(&self) -> usize {
        self.differences.len()
    }

    /// Largest rate over the tail of the run, ignoring steps whose
    /// difference already sits at the floor `floor`.
    pub fn tail_rate(&self, floor: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (k, r) in self.rates.iter().enumerate() {
            if self.differences[k] <= floor || self.differences[k + 1] <= floor {
                continue;
            }
            best = Some(best.map_or(*r, |b: f64| b.max(*r)));
        }
        best
    }
}

#[derive(Debug, Clone)]
pub struct PicardOutcome<S> {
    pub solution: S,
    pub trace: PicardTrace,
}

/// Iterate u^{n+1} = y + B(u^n, u^n) from `start` (default y).
///
/// Stops once the successive difference drops below the tolerance, or after
/// `max_iterations`. Three consecutive rates ≥ 1, or a non-finite norm, is
/// reported as divergence with the trace attached.
pub fn picard_solve<P: PicardProblem>(
    problem: &P,
    y: &P::State,
    options: PicardOptions,
    start: Option<&P::State>,
) -> Result<PicardOutcome<P::State>> {
    let mut u = start.cloned().unwrap_or_else(|| y.clone());
    let mut trace = PicardTrace {
        iterate_norms: vec![problem.norm(&u)],
        ..Default::default()
    };
    let mut growing = 0usize;
    for _ in 0..options.max_iterations {
        let next = problem.add(y, &problem.bilinear(&u, &u)?);
        let diff = problem.norm(&problem.sub(&next, &u));
        let norm = problem.norm(&next);
        if let Some(&prev) = trace.differences.last() {
            let rate = if prev > 0.0 { diff / prev } else { 0.0 };
            trace.rates.push(rate);
            growing = if rate >= 1.0 { growing + 1 } else { 0 };
        }
        trace.differences.push(diff);
        trace.iterate_norms.push(norm);
        u = next;
        if !diff.is_finite() || !norm.is_finite() || growing >= 3 {
            return Err(Error::Divergence(Box::new(trace)));
        }
        if diff < options.tolerance {
            trace.converged = true;
            break;
        }
    }
    Ok(PicardOutcome { solution: u, trace })
}

/// Scalar model u = y + c u², useful as an oracle for the engine.
#[derive(Debug, Clone, Copy)]
pub struct ScalarQuadratic {
    pub c: f64,
}

impl PicardProblem for ScalarQuadratic {
    type State = f64;

    fn bilinear(&self, u: &f64, v: &f64) -> Result<f64> {
        Ok(self.c * u * v)
    }

    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }

    fn sub(&self, a: &f64, b: &f64) -> f64 {
        a - b
    }

    fn norm(&self, u: &f64) -> f64 {
        u.abs()
    }
}
