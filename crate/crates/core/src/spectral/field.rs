use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft::fft_nd;
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::parallel;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Frequency-side field: coefficients û(ξ) under the symmetric
/// (2π)^{-dims/2} transform, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    components: usize,
    data: Vec<Complex64>,
}

/// Space-side samples on the same grid, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: GridSpec,
    components: usize,
    data: Vec<Complex64>,
}

macro_rules! field_common {
    ($ty:ident) => {
        impl $ty {
            pub fn zeros(grid: GridSpec, components: usize) -> Self {
                assert!(components >= 1, "a field needs at least one component");
                Self {
                    grid,
                    components,
                    data: vec![ZERO; components * grid.len()],
                }
            }

            pub fn from_data(grid: GridSpec, components: usize, data: Vec<Complex64>) -> Result<Self> {
                if components == 0 || data.len() != components * grid.len() {
                    return Err(Error::GridMismatch(format!(
                        "expected {} values for {} component(s) on n={}, dims={}, got {}",
                        components * grid.len(),
                        components,
                        grid.n,
                        grid.dims,
                        data.len()
                    )));
                }
                Ok(Self {
                    grid,
                    components,
                    data,
                })
            }

            pub fn grid(&self) -> GridSpec {
                self.grid
            }

            pub fn components(&self) -> usize {
                self.components
            }

            pub fn data(&self) -> &[Complex64] {
                &self.data
            }

            pub fn data_mut(&mut self) -> &mut [Complex64] {
                &mut self.data
            }

            pub fn into_data(self) -> Vec<Complex64> {
                self.data
            }

            pub fn component(&self, c: usize) -> &[Complex64] {
                let len = self.grid.len();
                &self.data[c * len..(c + 1) * len]
            }

            pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
                let len = self.grid.len();
                &mut self.data[c * len..(c + 1) * len]
            }

            /// Euclidean magnitude over components at one storage index.
            pub fn magnitude(&self, index: usize) -> f64 {
                let len = self.grid.len();
                if self.components == 1 {
                    return self.data[index].norm();
                }
                (0..self.components)
                    .map(|c| self.data[c * len + index].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            }

            pub fn scaled(&self, a: f64) -> Self {
                let mut out = self.clone();
                out.data.iter_mut().for_each(|z| *z *= a);
                out
            }

            pub fn scale_mut(&mut self, a: f64) {
                self.data.iter_mut().for_each(|z| *z *= a);
            }

            pub fn axpy(&mut self, a: f64, other: &Self) -> Result<()> {
                self.check_compatible(other)?;
                for (x, y) in self.data.iter_mut().zip(&other.data) {
                    *x += y * a;
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

            pub fn check_compatible(&self, other: &Self) -> Result<()> {
                if self.grid != other.grid {
                    return Err(Error::GridMismatch(format!(
                        "n={} dims={} vs n={} dims={}",
                        self.grid.n, self.grid.dims, other.grid.n, other.grid.dims
                    )));
                }
                if self.components != other.components {
                    return Err(Error::ComponentMismatch {
                        expected: self.components,
                        found: other.components,
                    });
                }
                Ok(())
            }

            pub fn is_zero(&self) -> bool {
                self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
            }
        }
    };
}

field_common!(SpectralField);
field_common!(PhysicalField);

impl SpectralField {
    /// Sum of |û(ξ)|² over the lattice (unit frequency measure).
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Largest |û(0)| over components.
    pub fn zero_mode(&self) -> f64 {
        (0..self.components)
            .map(|c| self.component(c)[0].norm())
            .fold(0.0, f64::max)
    }

    /// Kill the ξ = 0 coefficient of every component and return the removed
    /// physical-side means.
    pub fn remove_mean(&mut self) -> Vec<Complex64> {
        let norm = (2.0 * PI).powf(-(self.grid.dims as f64) / 2.0);
        (0..self.components)
            .map(|c| {
                let slot = &mut self.component_mut(c)[0];
                let mean = *slot * norm;
                *slot = ZERO;
                mean
            })
            .collect()
    }

    /// Relative defect of the Hermitian symmetry û(-ξ) = conj û(ξ).
    pub fn hermitian_defect(&self) -> f64 {
        let grid = self.grid;
        let scale = self
            .data
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for c in 0..self.components {
            let comp = self.component(c);
            for i in 0..grid.len() {
                let j = grid.negated_index(i);
                worst = worst.max((comp[j] - comp[i].conj()).norm());
            }
        }
        worst / scale
    }

    /// Zero every coefficient whose storage index fails `keep`.
    pub fn retain(&mut self, keep: impl Fn(usize) -> bool) {
        let len = self.grid.len();
        for c in 0..self.components {
            let comp = &mut self.data[c * len..(c + 1) * len];
            for (i, z) in comp.iter_mut().enumerate() {
                if !keep(i) {
                    *z = ZERO;
                }
            }
        }
    }

    /// Inner product Σ_ξ Σ_c û_c(ξ) conj(v̂_c(ξ)).
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum())
    }
}

impl PhysicalField {
    pub fn from_fn(grid: GridSpec, components: usize, f: impl Fn([f64; 3], usize) -> Complex64) -> Self {
        let mut out = Self::zeros(grid, components);
        let len = grid.len();
        for c in 0..components {
            for i in 0..len {
                out.data[c * len + i] = f(grid.point(i), c);
            }
        }
        out
    }

    /// Σ_x |f(x)|² · cell volume.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Pointwise product of two scalar fields (no dealiasing).
    pub fn pointwise(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect();
        Self::from_data(self.grid, self.components, data)
    }

    pub fn max_imaginary(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

/// Space side to frequency side:
/// û(ξ) = (2π)^{-d/2} Σ_x f(x) e^{-iξ·x} (2π/n)^d.
pub fn forward_transform(f: &PhysicalField) -> SpectralField {
    let grid = f.grid();
    let d = grid.dims as f64;
    let scale = (2.0 * PI).powf(d / 2.0) / (grid.len() as f64);
    let mut data = f.data().to_vec();
    parallel::for_each_chunk_mut(&mut data, grid.len(), |_, chunk| {
        fft_nd(chunk, grid.n, grid.dims, false);
        chunk.iter_mut().for_each(|z| *z *= scale);
    });
    SpectralField {
        grid,
        components: f.components(),
        data,
    }
}

/// Frequency side to space side: f(x) = (2π)^{-d/2} Σ_ξ û(ξ) e^{iξ·x}.
pub fn inverse_transform(g: &SpectralField) -> PhysicalField {
    let grid = g.grid();
    let scale = (2.0 * PI).powf(-(grid.dims as f64) / 2.0);
    let mut data = g.data().to_vec();
    parallel::for_each_chunk_mut(&mut data, grid.len(), |_, chunk| {
        fft_nd(chunk, grid.n, grid.dims, true);
        chunk.iter_mut().for_each(|z| *z *= scale);
    });
    PhysicalField {
        grid,
        components: g.components(),
        data,
    }
}
