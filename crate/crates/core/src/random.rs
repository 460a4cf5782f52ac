//! Seeded random fields with prescribed radial support.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::{leray_project, GridSpec, SpectralField};

/// Amplitude envelope of the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spectrum {
    Flat,
    /// |ξ|^slope
    PowerLaw(f64),
}

/// Radial support lo ≤ |ξ| ≤ hi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Ball of radius `r` without the origin.
    pub fn ball(r: f64) -> Self {
        Self { lo: 0.5, hi: r }
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && r <= self.hi
    }
}

/// Per-trial seed derivation shared by all sweeps.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    base ^ index
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zero-mean field with complex Gaussian coefficients on `support`,
/// Hermitian-symmetrized so the physical field is real. Nyquist modes are
/// left empty.
pub fn random_field(
    grid: GridSpec,
    components: usize,
    support: Support,
    spectrum: Spectrum,
    seed: u64,
) -> SpectralField {
    let mut r = rng(seed);
    let lattice = grid.lattice();
    let len = grid.len();
    let mut raw = vec![Complex64::new(0.0, 0.0); components * len];
    for c in 0..components {
        for i in 0..len {
            let a: f64 = StandardNormal.sample(&mut r);
            let b: f64 = StandardNormal.sample(&mut r);
            let rad = lattice.radii[i];
            if rad == 0.0 || lattice.nyquist[i] || !support.contains(rad) {
                continue;
            }
            let amp = match spectrum {
                Spectrum::Flat => 1.0,
                Spectrum::PowerLaw(s) => rad.powf(s),
            };
            raw[c * len + i] = Complex64::new(a, b) * amp;
        }
    }
    let mut data = vec![Complex64::new(0.0, 0.0); components * len];
    for c in 0..components {
        for i in 0..len {
            let j = grid.negated_index(i);
            data[c * len + i] = (raw[c * len + i] + raw[c * len + j].conj()) * 0.5;
        }
    }
    SpectralField::from_data(grid, components, data).expect("sizes agree")
}

/// Divergence-free random vector field (3D only).
pub fn random_solenoidal(grid: GridSpec, support: Support, spectrum: Spectrum, seed: u64) -> Result<SpectralField> {
    leray_project(&random_field(grid, 3, support, spectrum, seed))
}

/// Real single-mode pair a e^{iξ₀·x} + conj, as frequency-side coefficients.
pub fn mode_pair(grid: GridSpec, components: usize, k: [i64; 3], amplitude: &[Complex64]) -> SpectralField {
    let mut g = SpectralField::zeros(grid, components);
    let i = grid.index_of(k).expect("mode inside lattice");
    let j = grid.index_of([-k[0], -k[1], -k[2]]).expect("mode inside lattice");
    for c in 0..components {
        g.component_mut(c)[i] = amplitude[c];
        g.component_mut(c)[j] = amplitude[c].conj();
    }
    g
}
