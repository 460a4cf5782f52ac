use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Fourier multipliers acting coefficient-wise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Multiplier {
    /// ∂^α with symbol (iξ)^α.
    Derivative([u32; 3]),
    /// Riesz transform R_j with symbol -iξ_j/|ξ|.
    Riesz(usize),
    /// (-Δ)^{-1}, symbol |ξ|^{-2}.
    InverseLaplacian,
    /// Δ, symbol -|ξ|².
    Laplacian,
    /// e^{tΔ}, symbol e^{-t|ξ|²}.
    Heat(f64),
    /// |∇|^s, symbol |ξ|^s.
    FractionalLaplacian(f64),
}

/// What to do with a nonzero ξ = 0 coefficient under a singular multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanPolicy {
    #[default]
    Reject,
    Remove,
}

impl Multiplier {
    pub fn is_singular(&self) -> bool {
        match self {
            Multiplier::Riesz(_) | Multiplier::InverseLaplacian => true,
            Multiplier::FractionalLaplacian(s) => *s < 0.0,
            _ => false,
        }
    }

    /// Symbol at lattice frequency `k` with radius `r` on `grid`.
    pub fn symbol(&self, grid: GridSpec, k: [i64; 3], r: f64) -> Complex64 {
        let nyq = -(grid.n as i64) / 2;
        match *self {
            Multiplier::Derivative(alpha) => {
                let mut z = Complex64::new(1.0, 0.0);
                for d in 0..3 {
                    if alpha[d] == 0 {
                        continue;
                    }
                    if d >= grid.dims || k[d] == nyq {
                        return Complex64::new(0.0, 0.0);
                    }
                    z *= Complex64::new(0.0, k[d] as f64).powu(alpha[d]);
                }
                z
            }
            Multiplier::Riesz(j) => {
                if r == 0.0 || j >= grid.dims || k[j] == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -(k[j] as f64) / r)
                }
            }
            Multiplier::InverseLaplacian => {
                if r == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(1.0 / (r * r), 0.0)
                }
            }
            Multiplier::Laplacian => Complex64::new(-r * r, 0.0),
            Multiplier::Heat(t) => Complex64::new((-t * r * r).exp(), 0.0),
            Multiplier::FractionalLaplacian(s) => {
                if r == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(r.powf(s), 0.0)
                }
            }
        }
    }
}

/// Largest zero-mode magnitude relative to the largest coefficient.
fn relative_zero_mode(g: &SpectralField) -> f64 {
    let scale = g.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        g.zero_mode() / scale
    }
}

pub(crate) fn ensure_zero_mean(g: &SpectralField, policy: MeanPolicy) -> Result<SpectralField> {
    let mut out = g.clone();
    if relative_zero_mode(g) > 1e-13 {
        match policy {
            MeanPolicy::Reject => return Err(Error::NonzeroMean(g.zero_mode())),
            MeanPolicy::Remove => {
                out.remove_mean();
            }
        }
    }
    Ok(out)
}

/// Coefficient-wise product with a multiplier symbol.
pub fn apply_multiplier(g: &SpectralField, m: Multiplier, policy: MeanPolicy) -> Result<SpectralField> {
    let mut out = if m.is_singular() {
        ensure_zero_mean(g, policy)?
    } else {
        g.clone()
    };
    let grid = g.grid();
    let lattice = grid.lattice();
    let len = grid.len();
    let symbols: Vec<Complex64> = (0..len)
        .map(|i| m.symbol(grid, lattice.freqs[i], lattice.radii[i]))
        .collect();
    for c in 0..out.components() {
        for (z, s) in out.component_mut(c).iter_mut().zip(&symbols) {
            *z *= s;
        }
    }
    Ok(out)
}

/// Apply several multipliers at once. The symbols are multiplied together
/// first, so the result does not depend on the order of `ms`.
pub fn apply_multipliers(g: &SpectralField, ms: &[Multiplier], policy: MeanPolicy) -> Result<SpectralField> {
    let mut out = if ms.iter().any(|m| m.is_singular()) {
        ensure_zero_mean(g, policy)?
    } else {
        g.clone()
    };
    let grid = g.grid();
    let lattice = grid.lattice();
    let symbols: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let mut parts: Vec<Complex64> = ms
                .iter()
                .map(|m| m.symbol(grid, lattice.freqs[i], lattice.radii[i]))
                .collect();
            // canonical order so that permutations of `ms` agree bit for bit
            parts.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
            parts.into_iter().fold(Complex64::new(1.0, 0.0), |acc, s| acc * s)
        })
        .collect();
    for c in 0..out.components() {
        for (z, s) in out.component_mut(c).iter_mut().zip(&symbols) {
            *z *= s;
        }
    }
    Ok(out)
}

/// Divergence Σ_d ∂_d u_d of a vector field with `dims` components.
pub fn divergence(u: &SpectralField) -> Result<SpectralField> {
    let grid = u.grid();
    if u.components() != grid.dims {
        return Err(Error::ComponentMismatch {
            expected: grid.dims,
            found: u.components(),
        });
    }
    let lattice = grid.lattice();
    let mut out = SpectralField::zeros(grid, 1);
    for d in 0..grid.dims {
        let mut alpha = [0u32; 3];
        alpha[d] = 1;
        let m = Multiplier::Derivative(alpha);
        let comp = u.component(d);
        for (i, z) in out.component_mut(0).iter_mut().enumerate() {
            *z += comp[i] * m.symbol(grid, lattice.freqs[i], lattice.radii[i]);
        }
    }
    Ok(out)
}

/// Gradient of a scalar field.
pub fn gradient(f: &SpectralField) -> Result<SpectralField> {
    let grid = f.grid();
    if f.components() != 1 {
        return Err(Error::ComponentMismatch {
            expected: 1,
            found: f.components(),
        });
    }
    let lattice = grid.lattice();
    let mut out = SpectralField::zeros(grid, grid.dims);
    for d in 0..grid.dims {
        let mut alpha = [0u32; 3];
        alpha[d] = 1;
        let m = Multiplier::Derivative(alpha);
        let src = f.component(0);
        for (i, z) in out.component_mut(d).iter_mut().enumerate() {
            *z = src[i] * m.symbol(grid, lattice.freqs[i], lattice.radii[i]);
        }
    }
    Ok(out)
}

/// max_ξ |ξ·û(ξ)| / ‖u‖₂, computed with the raw (un-truncated) symbol.
pub fn divergence_residual(u: &SpectralField) -> f64 {
    let grid = u.grid();
    let lattice = grid.lattice();
    let norm = u.l2_norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        let k = lattice.freqs[i];
        let mut dot = Complex64::new(0.0, 0.0);
        for d in 0..u.components().min(3) {
            dot += u.component(d)[i] * k[d] as f64;
        }
        worst = worst.max(dot.norm());
    }
    worst / norm
}

/// Leray projector with symbol δ_ij - ξ_iξ_j/|ξ|².
pub fn leray_project(u: &SpectralField) -> Result<SpectralField> {
    let grid = u.grid();
    if u.components() != 3 || grid.dims != 3 {
        return Err(Error::ComponentMismatch {
            expected: 3,
            found: u.components(),
        });
    }
    let u = ensure_zero_mean(u, MeanPolicy::Reject)?;
    let lattice = grid.lattice();
    let len = grid.len();
    let mut out = SpectralField::zeros(grid, 3);
    {
        let data = out.data_mut();
        for i in 0..len {
            let r2 = lattice.radii[i] * lattice.radii[i];
            if r2 == 0.0 {
                continue;
            }
            let k = lattice.freqs[i].map(|c| c as f64);
            let v = [u.component(0)[i], u.component(1)[i], u.component(2)[i]];
            let dot = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / r2;
            for d in 0..3 {
                data[d * len + i] = v[d] - dot * k[d];
            }
        }
    }
    Ok(out)
}

/// Volume potential v = (-Δ)^{-1}u; requires (or removes) zero mean.
pub fn volume_potential(u: &SpectralField, policy: MeanPolicy) -> Result<SpectralField> {
    if u.components() != 1 {
        return Err(Error::ComponentMismatch {
            expected: 1,
            found: u.components(),
        });
    }
    apply_multiplier(u, Multiplier::InverseLaplacian, policy)
}
