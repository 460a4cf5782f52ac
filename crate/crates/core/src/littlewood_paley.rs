//! Dyadic partition of unity on the frequency lattice, the blocks Δⱼ and
//! low-pass cutoffs Sⱼ, and Bony's paraproduct split.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel;
use crate::spectral::{GridSpec, PhysicalField, ProductMode, ProductSpace, SpectralField};

pub const CHI_FLAT: f64 = 3.0 / 4.0;
pub const CHI_SUPPORT: f64 = 4.0 / 3.0;
/// φ is supported in [3/4, 8/3].
pub const PHI_INNER: f64 = 3.0 / 4.0;
pub const PHI_OUTER: f64 = 8.0 / 3.0;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Generalized smoothstep of order k: 0 at 0, 1 at 1, first k derivatives
/// vanish at both ends.
pub fn smoothstep(k: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // the power-basis sum cancels badly near 1; use S(x) = 1 - S(1 - x)
    if x > 0.5 {
        return 1.0 - smoothstep(k, 1.0 - x);
    }
    let mut sum = 0.0;
    for i in 0..=k {
        sum += binomial(k + i, i) * binomial(2 * k + 1, k - i) * (-x).powi(i as i32);
    }
    x.powi(k as i32 + 1) * sum
}

#[derive(Debug, Clone, Serialize)]
pub struct DyadicPartition {
    pub grid: GridSpec,
    pub order: u32,
    pub j_min: i32,
    pub j_max: i32,
    #[serde(skip)]
    tables: Arc<Vec<Vec<(usize, f64)>>>,
}

impl DyadicPartition {
    /// χ(r): 1 on [0, 3/4], 0 beyond 4/3, smoothstep in between.
    pub fn chi(&self, r: f64) -> f64 {
        chi(self.order, r)
    }

    /// φ(r) = χ(r/2) - χ(r).
    pub fn phi(&self, r: f64) -> f64 {
        self.chi(r / 2.0) - self.chi(r)
    }

    pub fn range(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    pub fn shells(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    /// Radii on which Σⱼ φ(2^{-j} r) = 1 exactly.
    pub fn covered_band(&self) -> (f64, f64) {
        (
            2f64.powi(self.j_min) * CHI_SUPPORT,
            2f64.powi(self.j_max + 1) * CHI_FLAT,
        )
    }

    pub fn check_j(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::DyadicOutOfRange {
                j,
                min: self.j_min,
                max: self.j_max,
            });
        }
        Ok(())
    }

    /// Nonzero (storage index, φ(2^{-j}|ξ|)) pairs of block j.
    pub fn block_table(&self, j: i32) -> Result<&[(usize, f64)]> {
        self.check_j(j)?;
        Ok(&self.tables[(j - self.j_min) as usize])
    }

    /// Largest radius on which the block-j weight is exactly 1 and all
    /// other weights vanish: [4/3·2^j, 3/2·2^j].
    pub fn plateau(&self, j: i32) -> (f64, f64) {
        let s = 2f64.powi(j);
        (CHI_SUPPORT * s, 2.0 * CHI_FLAT * s)
    }

    /// True when every nonzero coefficient of `f` sits inside the covered band.
    pub fn is_band_covered(&self, f: &SpectralField) -> bool {
        let (lo, hi) = self.covered_band();
        let lattice = f.grid().lattice();
        (0..f.grid().len()).all(|i| {
            let r = lattice.radii[i];
            (lo..=hi).contains(&r) || (0..f.components()).all(|c| f.component(c)[i].norm() == 0.0)
        })
    }

    /// Zero every coefficient outside the covered band.
    pub fn restrict_to_band(&self, f: &SpectralField) -> SpectralField {
        let (lo, hi) = self.covered_band();
        let lattice = f.grid().lattice();
        let mut out = f.clone();
        out.retain(|i| (lo..=hi).contains(&lattice.radii[i]));
        out
    }

    fn check_grid(&self, f: &SpectralField) -> Result<()> {
        if f.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "partition built for n={} dims={}, field has n={} dims={}",
                self.grid.n,
                self.grid.dims,
                f.grid().n,
                f.grid().dims
            )));
        }
        Ok(())
    }
}

fn chi(order: u32, r: f64) -> f64 {
    1.0 - smoothstep(order, (r - CHI_FLAT) / (CHI_SUPPORT - CHI_FLAT))
}

/// Partition with the default smoothstep order 4.
pub fn build_partition(grid: GridSpec) -> Result<DyadicPartition> {
    build_partition_with_order(grid, 4)
}

/// j runs from 0 (the shell holding |ξ| = 1) to the largest j whose plateau
/// start 4/3·2^j still lies inside the half-grid n/2.
pub fn build_partition_with_order(grid: GridSpec, order: u32) -> Result<DyadicPartition> {
    if order < 3 {
        return Err(Error::InvalidGrid(format!(
            "smoothstep order must be at least 3 (got {order})"
        )));
    }
    if grid.n < 16 {
        return Err(Error::InvalidGrid(format!(
            "n = {} cannot hold two dyadic shells; use n >= 16",
            grid.n
        )));
    }
    let j_min = 0;
    let mut j_max = 0;
    while 2f64.powi(j_max + 1) * CHI_SUPPORT <= grid.n as f64 / 2.0 {
        j_max += 1;
    }
    let lattice = grid.lattice();
    let tables = parallel::map_range((j_max - j_min + 1) as usize, |k| {
        let scale = 2f64.powi(-(j_min + k as i32));
        let mut t = Vec::new();
        for (i, &r) in lattice.radii.iter().enumerate() {
            let w = chi(order, r * scale / 2.0) - chi(order, r * scale);
            if w != 0.0 {
                t.push((i, w));
            }
        }
        t
    });
    Ok(DyadicPartition {
        grid,
        order,
        j_min,
        j_max,
        tables: Arc::new(tables),
    })
}

fn apply_table(f: &SpectralField, table: &[(usize, f64)]) -> SpectralField {
    let mut out = SpectralField::zeros(f.grid(), f.components());
    let len = f.grid().len();
    let data = out.data_mut();
    for c in 0..f.components() {
        let src = f.component(c);
        for &(i, w) in table {
            data[c * len + i] = src[i] * w;
        }
    }
    out
}

/// Δⱼf: coefficients multiplied by φ(2^{-j}|ξ|).
pub fn dyadic_block(f: &SpectralField, j: i32, part: &DyadicPartition) -> Result<SpectralField> {
    part.check_grid(f)?;
    Ok(apply_table(f, part.block_table(j)?))
}

/// Sⱼf: coefficients multiplied by χ(2^{-j}|ξ|). Accepts j_min - 1 ≤ j ≤ j_max + 1.
pub fn low_freq_cutoff(f: &SpectralField, j: i32, part: &DyadicPartition) -> Result<SpectralField> {
    part.check_grid(f)?;
    if j < part.j_min - 1 || j > part.j_max + 1 {
        return Err(Error::DyadicOutOfRange {
            j,
            min: part.j_min - 1,
            max: part.j_max + 1,
        });
    }
    let lattice = f.grid().lattice();
    let scale = 2f64.powi(-j);
    let mut out = f.clone();
    let len = f.grid().len();
    let data = out.data_mut();
    for c in 0..f.components() {
        for i in 0..len {
            data[c * len + i] *= part.chi(lattice.radii[i] * scale);
        }
    }
    Ok(out)
}

/// All blocks of one field.
#[derive(Debug, Clone)]
pub struct DyadicDecomposition {
    pub partition: DyadicPartition,
    pub blocks: Vec<(i32, SpectralField)>,
}

impl DyadicDecomposition {
    pub fn new(f: &SpectralField, part: &DyadicPartition) -> Result<Self> {
        part.check_grid(f)?;
        let js: Vec<i32> = part.range().collect();
        let blocks = parallel::map_slice(&js, |&j| (j, apply_table(f, part.block_table(j).unwrap())));
        Ok(Self {
            partition: part.clone(),
            blocks,
        })
    }

    pub fn block(&self, j: i32) -> Option<&SpectralField> {
        self.blocks.iter().find(|(k, _)| *k == j).map(|(_, b)| b)
    }

    pub fn reconstruct(&self) -> SpectralField {
        let mut it = self.blocks.iter();
        let mut acc = it.next().expect("at least one block").1.clone();
        for (_, b) in it {
            acc.axpy(1.0, b).expect("blocks share a grid");
        }
        acc
    }
}

/// Bony split uv = T_u v + T_v u + R(u, v).
#[derive(Debug, Clone)]
pub struct Paraproduct {
    /// Σⱼ S_{j-1}u · Δⱼv
    pub t_u_v: SpectralField,
    /// Σⱼ S_{j-1}v · Δⱼu
    pub t_v_u: SpectralField,
    /// Σ_{|j-j'|≤1} Δⱼu · Δ_{j'}v
    pub remainder: SpectralField,
}

impl Paraproduct {
    pub fn sum(&self) -> SpectralField {
        let mut s = self.t_u_v.add(&self.t_v_u).unwrap();
        s.axpy(1.0, &self.remainder).unwrap();
        s
    }
}

/// Paraproduct split of two scalar fields with products formed space-side
/// on the n-grid. Low-pass parts use S_{j-1} = Σ_{k ≤ j-2} Δ_k; the
/// remainder collects neighbouring blocks |j - j'| ≤ 1, so the three pieces
/// add up to the full product for band-covered inputs.
pub fn paraproduct_split(u: &SpectralField, v: &SpectralField, part: &DyadicPartition) -> Result<Paraproduct> {
    paraproduct_split_with(u, v, part, ProductMode::Grid)
}

pub fn paraproduct_split_with(
    u: &SpectralField,
    v: &SpectralField,
    part: &DyadicPartition,
    mode: ProductMode,
) -> Result<Paraproduct> {
    part.check_grid(u)?;
    u.check_compatible(v)?;
    if u.components() != 1 {
        return Err(Error::ComponentMismatch {
            expected: 1,
            found: u.components(),
        });
    }
    let space = ProductSpace::new(part.grid, mode);
    let du = DyadicDecomposition::new(u, part)?;
    let dv = DyadicDecomposition::new(v, part)?;
    let shells = part.shells();
    // physical blocks and running low-pass sums S_{j-1} = Σ_{k<=j-2} Δ_k
    let pu: Vec<PhysicalField> = parallel::map_slice(&du.blocks, |(_, b)| space.to_physical(b));
    let pv: Vec<PhysicalField> = parallel::map_slice(&dv.blocks, |(_, b)| space.to_physical(b));
    let work = space.work_grid();
    let low = |p: &[PhysicalField], k: usize| -> PhysicalField {
        let mut acc = PhysicalField::zeros(work, 1);
        for b in p.iter().take(k.saturating_sub(1)) {
            acc.axpy(1.0, b).unwrap();
        }
        acc
    };
    let mut tuv = PhysicalField::zeros(work, 1);
    let mut tvu = PhysicalField::zeros(work, 1);
    let mut rem = PhysicalField::zeros(work, 1);
    for k in 0..shells {
        tuv.axpy(1.0, &low(&pu, k).pointwise(&pv[k])?)?;
        tvu.axpy(1.0, &low(&pv, k).pointwise(&pu[k])?)?;
        for k2 in k.saturating_sub(1)..(k + 2).min(shells) {
            rem.axpy(1.0, &pu[k].pointwise(&pv[k2])?)?;
        }
    }
    Ok(Paraproduct {
        t_u_v: space.to_spectral(&tuv),
        t_v_u: space.to_spectral(&tvu),
        remainder: space.to_spectral(&rem),
    })
}
