use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{forward_transform, inverse_transform, PhysicalField, SpectralField};
use super::grid::GridSpec;
use crate::error::{Error, Result};

/// How space-side products are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProductMode {
    /// Pointwise on the n-grid; exact only when the sum of supports fits.
    #[default]
    Grid,
    /// Zero-padded to 2n per axis: every retained mode of the product is exact.
    Padded,
    /// n-grid product with the 2/3 rule applied to inputs and output.
    Dealiased,
}

/// Transform plumbing for repeated products on one grid.
#[derive(Debug, Clone, Copy)]
pub struct ProductSpace {
    pub grid: GridSpec,
    pub mode: ProductMode,
    work: GridSpec,
}

impl ProductSpace {
    pub fn new(grid: GridSpec, mode: ProductMode) -> Self {
        let work = match mode {
            ProductMode::Padded => GridSpec {
                n: grid.n * 2,
                dims: grid.dims,
            },
            _ => grid,
        };
        Self { grid, mode, work }
    }

    pub fn work_grid(&self) -> GridSpec {
        self.work
    }

    fn dealias_keep(&self, k: [i64; 3]) -> bool {
        let cut = self.grid.n as i64 / 3;
        k.iter().all(|c| c.abs() <= cut)
    }

    /// Space-side samples of `g` on the work grid.
    pub fn to_physical(&self, g: &SpectralField) -> PhysicalField {
        match self.mode {
            ProductMode::Grid => inverse_transform(g),
            ProductMode::Dealiased => {
                let lattice = self.grid.lattice();
                let mut h = g.clone();
                h.retain(|i| self.dealias_keep(lattice.freqs[i]));
                inverse_transform(&h)
            }
            ProductMode::Padded => {
                let lattice = self.grid.lattice();
                let mut big = SpectralField::zeros(self.work, g.components());
                let len = self.grid.len();
                let big_len = self.work.len();
                let targets: Vec<usize> = (0..len)
                    .map(|i| {
                        self.work
                            .index_of(lattice.freqs[i])
                            .expect("padded grid holds the lattice")
                    })
                    .collect();
                {
                    let data = big.data_mut();
                    for c in 0..g.components() {
                        let src = g.component(c);
                        for (i, &t) in targets.iter().enumerate() {
                            data[c * big_len + t] = src[i];
                        }
                    }
                }
                inverse_transform(&big)
            }
        }
    }

    /// Back to the frequency side on the base grid, truncating as the mode requires.
    pub fn to_spectral(&self, f: &PhysicalField) -> SpectralField {
        match self.mode {
            ProductMode::Grid => forward_transform(f),
            ProductMode::Dealiased => {
                let lattice = self.grid.lattice();
                let mut g = forward_transform(f);
                g.retain(|i| self.dealias_keep(lattice.freqs[i]));
                g
            }
            ProductMode::Padded => {
                let big = forward_transform(f);
                let lattice = self.grid.lattice();
                let len = self.grid.len();
                let big_len = self.work.len();
                let mut out = SpectralField::zeros(self.grid, f.components());
                let data = out.data_mut();
                for c in 0..f.components() {
                    for i in 0..len {
                        let t = self
                            .work
                            .index_of(lattice.freqs[i])
                            .expect("padded grid holds the lattice");
                        data[c * len + i] = big.data()[c * big_len + t];
                    }
                }
                out
            }
        }
    }

    /// Product of two scalar fields.
    pub fn product(&self, a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
        if a.components() != 1 || b.components() != 1 {
            return Err(Error::ComponentMismatch {
                expected: 1,
                found: a.components().max(b.components()),
            });
        }
        a.check_compatible(b)?;
        let pa = self.to_physical(a);
        let pb = self.to_physical(b);
        Ok(self.to_spectral(&pa.pointwise(&pb)?))
    }
}

/// Pointwise product of component `ca` of `a` and component `cb` of `b`.
pub fn pointwise_components(a: &PhysicalField, ca: usize, b: &PhysicalField, cb: usize) -> PhysicalField {
    let data: Vec<Complex64> = a
        .component(ca)
        .iter()
        .zip(b.component(cb))
        .map(|(x, y)| x * y)
        .collect();
    PhysicalField::from_data(a.grid(), 1, data).expect("component lengths agree")
}

/// Frequency-side product of scalars on the n-grid (no padding).
pub fn grid_product(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    ProductSpace::new(a.grid(), ProductMode::Grid).product(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mode(grid: GridSpec, k: [i64; 3], c: Complex64) -> SpectralField {
        let mut g = SpectralField::zeros(grid, 1);
        g.component_mut(0)[grid.index_of(k).unwrap()] = c;
        let neg = [-k[0], -k[1], -k[2]];
        g.component_mut(0)[grid.index_of(neg).unwrap()] = c.conj();
        g
    }

    #[test]
    fn padded_product_of_two_modes_is_exact() {
        let grid = GridSpec::cube(16).unwrap();
        let a = mode(grid, [5, 0, 0], Complex64::new(1.0, 0.0));
        let b = mode(grid, [6, 1, 0], Complex64::new(0.0, 1.0));
        let space = ProductSpace::new(grid, ProductMode::Padded);
        let p = space.product(&a, &b).unwrap();
        // product of (2π)^{-3/2} e^{ik·x} factors: coefficient (2π)^{-3/2} a b at k_a + k_b
        let c = (2.0 * PI).powf(-1.5);
        let diff = grid.index_of([-1, -1, 0]).unwrap();
        assert!((p.component(0)[diff] - Complex64::new(0.0, -c)).norm() < 1e-14);
        // k_a + k_b = (11, 1, 0) leaves the band; the n-grid product aliases it to (-5, 1, 0)
        let alias = grid.index_of([-5, 1, 0]).unwrap();
        assert!(p.component(0)[alias].norm() < 1e-14);
        let grid_p = space_grid(grid).product(&a, &b).unwrap();
        assert!((grid_p.component(0)[alias] - Complex64::new(0.0, c)).norm() < 1e-14);
    }

    fn space_grid(grid: GridSpec) -> ProductSpace {
        ProductSpace::new(grid, ProductMode::Grid)
    }

    #[test]
    fn modes_agree_when_supports_fit() {
        let grid = GridSpec::cube(16).unwrap();
        let a = mode(grid, [2, 1, 0], Complex64::new(0.3, 0.4));
        let b = mode(grid, [0, 1, 3], Complex64::new(-0.2, 0.1));
        let p1 = space_grid(grid).product(&a, &b).unwrap();
        let p2 = ProductSpace::new(grid, ProductMode::Padded).product(&a, &b).unwrap();
        let p3 = ProductSpace::new(grid, ProductMode::Dealiased).product(&a, &b).unwrap();
        assert!(p1.sub(&p2).unwrap().l2_norm() < 1e-14);
        assert!(p1.sub(&p3).unwrap().l2_norm() < 1e-14);
    }
}
