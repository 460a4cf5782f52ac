//! Quadratic nonlinearities and their Duhamel integrals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heat::duhamel_series;
use crate::littlewood_paley::DyadicPartition;
use crate::parallel;
use crate::spectral::{
    divergence_residual, leray_project, volume_potential, GridSpec, MeanPolicy, PhysicalField, ProductMode,
    ProductSpace, SpectralField,
};
use crate::timeseries::TimeSeriesField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    NavierStokes,
    KellerSegel,
}

impl System {
    pub fn components(&self) -> usize {
        match self {
            System::NavierStokes => 3,
            System::KellerSegel => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            System::NavierStokes => "navier-stokes",
            System::KellerSegel => "keller-segel",
        }
    }
}

/// Divergence tolerance for solver inputs.
pub const SOLENOIDAL_TOL: f64 = 1e-10;

/// Products, projection and truncation shared by every evaluation of one
/// system's nonlinearity.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    pub system: System,
    pub space: ProductSpace,
    /// Coefficients kept in the state: no Nyquist modes and |ξ| below the
    /// outer edge of the last covered block.
    keep: Vec<bool>,
}

impl Nonlinearity {
    pub fn new(system: System, part: &DyadicPartition, dealias: bool) -> Result<Self> {
        let grid = part.grid;
        if grid.dims != 3 {
            return Err(Error::InvalidGrid("the solvers run in three dimensions".into()));
        }
        let mode = if dealias {
            ProductMode::Dealiased
        } else {
            ProductMode::Padded
        };
        Ok(Self {
            system,
            space: ProductSpace::new(grid, mode),
            keep: state_mask(part),
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.space.grid
    }

    pub fn truncate(&self, f: &mut SpectralField) {
        f.retain(|i| self.keep[i]);
    }

    /// Symmetrized P∇·(u⊗v) or ∇·(u∇(-Δ)⁻¹v) at one time.
    pub fn eval(&self, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
        let mut out = match self.system {
            System::NavierStokes => self.ns(u, v)?,
            System::KellerSegel => self.ks(u, v)?,
        };
        self.truncate(&mut out);
        Ok(out)
    }

    fn ns(&self, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
        check_components(u, 3)?;
        check_components(v, 3)?;
        let pu = self.space.to_physical(u);
        let pv = self.space.to_physical(v);
        let sym = |i: usize, j: usize| -> PhysicalField {
            let data = pu
                .component(i)
                .iter()
                .zip(pv.component(j))
                .zip(pv.component(i).iter().zip(pu.component(j)))
                .map(|((a, b), (c, d))| (a * b + c * d) * 0.5)
                .collect();
            PhysicalField::from_data(pu.grid(), 1, data).expect("sizes agree")
        };
        let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        let t: Vec<SpectralField> = pairs.iter().map(|&(i, j)| self.space.to_spectral(&sym(i, j))).collect();
        let at = |i: usize, j: usize| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            &t[pairs.iter().position(|&p| p == (a, b)).expect("pair listed")]
        };
        let grid = self.grid();
        let lattice = grid.lattice();
        let mut div = SpectralField::zeros(grid, 3);
        for i in 0..3 {
            let out = div.component_mut(i);
            for j in 0..3 {
                let tij = at(i, j).component(0);
                for (m, z) in out.iter_mut().enumerate() {
                    *z += Complex64::new(0.0, lattice.freqs[m][j] as f64) * tij[m];
                }
            }
        }
        self.truncate(&mut div);
        leray_project(&div)
    }

    fn ks(&self, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
        check_components(u, 1)?;
        check_components(v, 1)?;
        let gu = potential_gradient(u)?;
        let gv = potential_gradient(v)?;
        let pu = self.space.to_physical(u);
        let pv = self.space.to_physical(v);
        let pgu = self.space.to_physical(&gu);
        let pgv = self.space.to_physical(&gv);
        let mut flux = Vec::with_capacity(3 * pu.grid().len());
        for c in 0..3 {
            flux.extend(
                pu.component(0)
                    .iter()
                    .zip(pgv.component(c))
                    .zip(pv.component(0).iter().zip(pgu.component(c)))
                    .map(|((a, b), (x, y))| (a * b + x * y) * 0.5),
            );
        }
        let flux = PhysicalField::from_data(pu.grid(), 3, flux)?;
        Ok(divergence_of(&self.space.to_spectral(&flux)))
    }
}

fn check_components(f: &SpectralField, expected: usize) -> Result<()> {
    if f.components() != expected {
        return Err(Error::ComponentMismatch {
            expected,
            found: f.components(),
        });
    }
    Ok(())
}

/// Mask of coefficients the solvers keep.
pub fn state_mask(part: &DyadicPartition) -> Vec<bool> {
    let grid = part.grid;
    let lattice = grid.lattice();
    let edge = 2f64.powi(part.j_max) * crate::littlewood_paley::PHI_OUTER;
    (0..grid.len())
        .map(|i| !lattice.nyquist[i] && lattice.radii[i] < edge)
        .collect()
}

/// Σⱼ iξⱼ ĝⱼ without Nyquist special-casing (inputs carry none).
fn divergence_of(g: &SpectralField) -> SpectralField {
    let grid = g.grid();
    let lattice = grid.lattice();
    let mut out = SpectralField::zeros(grid, 1);
    let o = out.component_mut(0);
    for j in 0..g.components() {
        for (m, (z, x)) in o.iter_mut().zip(g.component(j)).enumerate() {
            *z += Complex64::new(0.0, lattice.freqs[m][j] as f64) * x;
        }
    }
    out
}

/// ∇(-Δ)⁻¹u.
pub fn potential_gradient(u: &SpectralField) -> Result<SpectralField> {
    let psi = volume_potential(u, MeanPolicy::Reject)?;
    let grid = u.grid();
    let lattice = grid.lattice();
    let mut out = SpectralField::zeros(grid, grid.dims);
    for j in 0..grid.dims {
        let c = out.component_mut(j);
        for (m, z) in c.iter_mut().enumerate() {
            *z = Complex64::new(0.0, lattice.freqs[m][j] as f64) * psi.component(0)[m];
        }
    }
    Ok(out)
}

/// ∇·(u∇ψ) with ψ = (-Δ)⁻¹u, products formed directly.
pub fn ks_direct_form(u: &SpectralField, space: &ProductSpace) -> Result<SpectralField> {
    check_components(u, 1)?;
    let g = potential_gradient(u)?;
    let pu = space.to_physical(u);
    let pg = space.to_physical(&g);
    let mut flux = Vec::with_capacity(3 * pu.grid().len());
    for c in 0..3 {
        flux.extend(pu.component(0).iter().zip(pg.component(c)).map(|(a, b)| a * b));
    }
    let flux = PhysicalField::from_data(pu.grid(), 3, flux)?;
    Ok(divergence_of(&space.to_spectral(&flux)))
}

/// The same quantity through u∇ψ = -∇·(∇ψ⊗∇ψ - ½|∇ψ|² I).
pub fn ks_symmetric_form(u: &SpectralField, space: &ProductSpace) -> Result<SpectralField> {
    check_components(u, 1)?;
    let g = potential_gradient(u)?;
    let pg = space.to_physical(&g);
    let len = pg.grid().len();
    let half_sq: Vec<Complex64> = (0..len)
        .map(|m| {
            (0..3)
                .map(|c| pg.component(c)[m] * pg.component(c)[m])
                .sum::<Complex64>()
                * 0.5
        })
        .collect();
    let grid = u.grid();
    let lattice = grid.lattice();
    // M_ij = ∂iψ ∂jψ - ½|∇ψ|² δ_ij; result is -∂i∂j M_ij.
    let mut out = SpectralField::zeros(grid, 1);
    for i in 0..3 {
        for j in i..3 {
            let data: Vec<Complex64> = (0..len)
                .map(|m| {
                    let d = if i == j { half_sq[m] } else { Complex64::new(0.0, 0.0) };
                    pg.component(i)[m] * pg.component(j)[m] - d
                })
                .collect();
            let mij = space.to_spectral(&PhysicalField::from_data(pg.grid(), 1, data)?);
            let mult = if i == j { 1.0 } else { 2.0 };
            let o = out.component_mut(0);
            for (m, z) in o.iter_mut().enumerate() {
                let k = lattice.freqs[m];
                *z += mij.component(0)[m] * (mult * (k[i] * k[j]) as f64);
            }
        }
    }
    Ok(out)
}

/// Duhamel integral of the nonlinearity along a trajectory, (B(u,v) + B(v,u))/2.
pub fn bilinear_series(op: &Nonlinearity, u: &TimeSeriesField, v: &TimeSeriesField) -> Result<TimeSeriesField> {
    if u.times != v.times {
        return Err(Error::InvalidTimeGrid(
            "bilinear arguments live on different grids".into(),
        ));
    }
    let idx: Vec<usize> = (0..u.times.len()).collect();
    let nodes = parallel::map_slice(&idx, |&k| op.eval(&u.snapshots[k], &v.snapshots[k]));
    let snapshots = nodes.into_iter().collect::<Result<Vec<_>>>()?;
    let f = TimeSeriesField {
        times: u.times.clone(),
        snapshots,
        quadrature: u.quadrature,
    };
    let mut out = duhamel_series(&f);
    for s in &mut out.snapshots {
        op.truncate(s);
    }
    Ok(out)
}

/// B₁(u, v) for solenoidal vector trajectories.
pub fn ns_bilinear(op: &Nonlinearity, u: &TimeSeriesField, v: &TimeSeriesField) -> Result<TimeSeriesField> {
    for s in u.snapshots.iter().chain(&v.snapshots) {
        check_components(s, 3)?;
        let r = divergence_residual(s);
        if r > SOLENOIDAL_TOL {
            return Err(Error::NotSolenoidal(r));
        }
    }
    bilinear_series(op, u, v)
}

/// B₂(u, v) for zero-mean scalar trajectories.
pub fn ks_bilinear(op: &Nonlinearity, u: &TimeSeriesField, v: &TimeSeriesField) -> Result<TimeSeriesField> {
    for s in u.snapshots.iter().chain(&v.snapshots) {
        check_components(s, 1)?;
        if s.zero_mode() != 0.0 {
            return Err(Error::NonzeroMean(s.zero_mode()));
        }
    }
    bilinear_series(op, u, v)
}
