//! Binary field snapshots ("FBLB") and radial spectra.
//!
//! Layout: magic `FBLB`, version u32, dims u8, n u32, components u8,
//! side u8 (0 physical, 1 spectral), then `components * n^dims` complex
//! values as little-endian (re, im) f64 pairs, component-major, in storage
//! (row-major, FFT-ordered) index order.

use std::io::Read;
use std::path::Path;

use num_complex::Complex64;

use super::field::{PhysicalField, SpectralField};
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::report::{fmt_f64, write_atomic};

pub const MAGIC: &[u8; 4] = b"FBLB";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 4 + 1 + 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Physical(PhysicalField),
    Spectral(SpectralField),
}

impl Snapshot {
    pub fn grid(&self) -> GridSpec {
        match self {
            Snapshot::Physical(f) => f.grid(),
            Snapshot::Spectral(g) => g.grid(),
        }
    }

    pub fn components(&self) -> usize {
        match self {
            Snapshot::Physical(f) => f.components(),
            Snapshot::Spectral(g) => g.components(),
        }
    }

    fn parts(&self) -> (u8, &[Complex64]) {
        match self {
            Snapshot::Physical(f) => (0, f.data()),
            Snapshot::Spectral(g) => (1, g.data()),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let grid = self.grid();
        let (side, data) = self.parts();
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(grid.dims as u8);
        out.extend_from_slice(&(grid.n as u32).to_le_bytes());
        out.push(self.components() as u8);
        out.push(side);
        for z in data {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Snapshot(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let dims = bytes[8] as usize;
        let n = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        let components = bytes[13] as usize;
        let side = bytes[14];
        let grid = GridSpec::new(n, dims).map_err(|e| Error::Snapshot(e.to_string()))?;
        if components == 0 {
            return Err(Error::Snapshot("zero components".into()));
        }
        let count = components * grid.len();
        let body = &bytes[HEADER_LEN..];
        if body.len() != 16 * count {
            return Err(Error::Snapshot(format!(
                "expected {} data bytes, found {}",
                16 * count,
                body.len()
            )));
        }
        let data: Vec<Complex64> = body
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        match side {
            0 => Ok(Snapshot::Physical(PhysicalField::from_data(grid, components, data)?)),
            1 => Ok(Snapshot::Spectral(SpectralField::from_data(grid, components, data)?)),
            s => Err(Error::Snapshot(format!("unknown side tag {s}"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.encode())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::decode(&bytes)
    }
}

/// Energy per integer shell round(|ξ|): (shell, energy, mode count).
pub fn radial_spectrum(g: &SpectralField) -> Vec<(usize, f64, usize)> {
    let grid = g.grid();
    let lattice = grid.lattice();
    let max_shell = lattice.radii.iter().fold(0.0f64, |a, &r| a.max(r)).round() as usize;
    let mut energy = vec![0.0; max_shell + 1];
    let mut count = vec![0usize; max_shell + 1];
    for i in 0..grid.len() {
        let k = lattice.radii[i].round() as usize;
        let e: f64 = (0..g.components()).map(|c| g.component(c)[i].norm_sqr()).sum();
        energy[k] += e;
        count[k] += 1;
    }
    (0..=max_shell)
        .filter(|&k| count[k] > 0)
        .map(|k| (k, energy[k], count[k]))
        .collect()
}

pub fn radial_spectrum_csv(g: &SpectralField) -> String {
    let mut out = String::from("shell,energy,modes\n");
    for (k, e, m) in radial_spectrum(g) {
        out.push_str(&format!("{k},{},{m}\n", fmt_f64(e)));
    }
    out
}
