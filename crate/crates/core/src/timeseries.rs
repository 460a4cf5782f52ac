//! Time grids and time-indexed spectral fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    LeftEndpoint,
    #[default]
    Trapezoid,
}

/// Strictly increasing nodes 0 = t₀ < … < t_M = T.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    times: Vec<f64>,
    description: String,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidTimeGrid("need at least two nodes".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidTimeGrid(format!(
                "first node must be 0 (got {})",
                times[0]
            )));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidTimeGrid(format!(
                "nodes must increase strictly ({} then {})",
                w[0], w[1]
            )));
        }
        let description = format!("custom, {} nodes, T = {}", times.len(), times[times.len() - 1]);
        Ok(Self { times, description })
    }

    /// M + 1 equispaced nodes on [0, T].
    pub fn uniform(t_end: f64, m: usize) -> Result<Self> {
        check_horizon(t_end, m)?;
        let times = (0..=m).map(|k| t_end * k as f64 / m as f64).collect();
        let mut g = Self::new(times)?;
        g.description = format!("uniform, M = {m}, T = {t_end}");
        Ok(g)
    }

    /// t_k = T (g^k - 1)/(g^M - 1): refined near t = 0.
    pub fn geometric(t_end: f64, m: usize, ratio: f64) -> Result<Self> {
        check_horizon(t_end, m)?;
        if !(ratio > 1.0) {
            return Err(Error::InvalidTimeGrid(format!(
                "geometric ratio must exceed 1 (got {ratio})"
            )));
        }
        let denom = ratio.powi(m as i32) - 1.0;
        let mut times: Vec<f64> = (0..=m).map(|k| t_end * (ratio.powi(k as i32) - 1.0) / denom).collect();
        times[m] = t_end;
        let mut g = Self::new(times)?;
        g.description = format!("geometric, M = {m}, ratio = {ratio}, T = {t_end}");
        Ok(g)
    }

    /// The default grid: geometric, M = 128, T = 1, ratio 1.05.
    pub fn default_grid() -> Self {
        Self::geometric(1.0, 128, 1.05).expect("default grid is valid")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn describe(&self) -> &str {
        &self.description
    }

    /// Quadrature weights for ∫₀ᵀ g dt from node values.
    pub fn weights(&self, rule: Quadrature) -> Vec<f64> {
        let t = &self.times;
        let m = t.len();
        let mut w = vec![0.0; m];
        for k in 0..m - 1 {
            let h = t[k + 1] - t[k];
            match rule {
                Quadrature::LeftEndpoint => w[k] += h,
                Quadrature::Trapezoid => {
                    w[k] += h / 2.0;
                    w[k + 1] += h / 2.0;
                }
            }
        }
        w
    }
}

fn check_horizon(t_end: f64, m: usize) -> Result<()> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidTimeGrid(format!(
            "horizon must be positive (got {t_end})"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidTimeGrid("need at least one interval".into()));
    }
    Ok(())
}

/// One spectral snapshot per time node.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesField {
    pub times: TimeGrid,
    pub snapshots: Vec<SpectralField>,
    pub quadrature: Quadrature,
}

impl TimeSeriesField {
    pub fn new(times: TimeGrid, snapshots: Vec<SpectralField>, quadrature: Quadrature) -> Result<Self> {
        if snapshots.len() != times.len() {
            return Err(Error::InvalidTimeGrid(format!(
                "{} snapshots for {} nodes",
                snapshots.len(),
                times.len()
            )));
        }
        let first = &snapshots[0];
        for s in &snapshots[1..] {
            first.check_compatible(s)?;
        }
        Ok(Self {
            times,
            snapshots,
            quadrature,
        })
    }

    pub fn zeros(times: TimeGrid, grid: GridSpec, components: usize) -> Self {
        let snapshots = vec![SpectralField::zeros(grid, components); times.len()];
        Self {
            times,
            snapshots,
            quadrature: Quadrature::default(),
        }
    }

    /// Same field at every node.
    pub fn constant(times: TimeGrid, f: &SpectralField) -> Self {
        let snapshots = vec![f.clone(); times.len()];
        Self {
            times,
            snapshots,
            quadrature: Quadrature::default(),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.snapshots[0].grid()
    }

    pub fn components(&self) -> usize {
        self.snapshots[0].components()
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self {
            times: self.times.clone(),
            snapshots: self.snapshots.iter().map(f).collect(),
            quadrature: self.quadrature,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|s| s.scaled(a))
    }

    pub fn axpy(&mut self, a: f64, other: &Self) -> Result<()> {
        if self.times != other.times {
            return Err(Error::InvalidTimeGrid("time grids differ".into()));
        }
        for (x, y) in self.snapshots.iter_mut().zip(&other.snapshots) {
            x.axpy(a, y)?;
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.snapshots.iter().all(|s| s.is_zero())
    }
}
