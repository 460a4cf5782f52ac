//! Periodic grids, transforms, Fourier multipliers and products.

mod fft;
pub mod field;
pub mod grid;
pub mod multiplier;
pub mod product;
pub mod snapshot;

pub use field::{forward_transform, inverse_transform, PhysicalField, SpectralField};
pub use grid::{torus_distance, GridSpec, Lattice};
pub use multiplier::{
    apply_multiplier, apply_multipliers, divergence, divergence_residual, gradient, leray_project, volume_potential,
    MeanPolicy, Multiplier,
};
pub use product::{grid_product, ProductMode, ProductSpace};
pub use snapshot::Snapshot;
