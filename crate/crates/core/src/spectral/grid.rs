use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on the 2π-periodic torus 𝕋^dims with `n` points per axis.
///
/// Storage is row-major with the last axis contiguous. On the frequency side
/// index `m` along an axis carries the integer frequency `m` for `m < n/2` and
/// `m - n` otherwise, so the lattice is ℤ^dims ∩ [-n/2, n/2)^dims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub dims: usize,
}

impl GridSpec {
    pub fn new(n: usize, dims: usize) -> Result<Self> {
        if !(1..=3).contains(&dims) {
            return Err(Error::InvalidGrid(format!("dims must be 1, 2 or 3 (got {dims})")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two and at least 8 (got {n})"
            )));
        }
        Ok(Self { n, dims })
    }

    /// Three-dimensional grid; the solvers only accept these.
    pub fn cube(n: usize) -> Result<Self> {
        Self::new(n, 3)
    }

    pub fn length(&self) -> f64 {
        2.0 * PI
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical cell volume (2π/n)^dims.
    pub fn cell_volume(&self) -> f64 {
        (2.0 * PI / self.n as f64).powi(self.dims as i32)
    }

    /// Total torus measure (2π)^dims.
    pub fn measure(&self) -> f64 {
        (2.0 * PI).powi(self.dims as i32)
    }

    /// Per-axis indices of a flat index; unused axes are 0.
    pub fn axes(&self, index: usize) -> [usize; 3] {
        let n = self.n;
        let mut out = [0usize; 3];
        let mut rem = index;
        for axis in (0..self.dims).rev() {
            out[axis] = rem % n;
            rem /= n;
        }
        out
    }

    pub fn flat(&self, axes: [usize; 3]) -> usize {
        let mut idx = 0;
        for a in axes.iter().take(self.dims) {
            idx = idx * self.n + a;
        }
        idx
    }

    /// Signed integer frequency carried by storage index `m` on one axis.
    pub fn axis_frequency(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    pub fn frequency(&self, index: usize) -> [i64; 3] {
        let a = self.axes(index);
        let mut k = [0i64; 3];
        for d in 0..self.dims {
            k[d] = self.axis_frequency(a[d]);
        }
        k
    }

    /// Storage index of a lattice frequency, if it lies in [-n/2, n/2)^dims.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let mut axes = [0usize; 3];
        for d in 0..3 {
            if d >= self.dims {
                if k[d] != 0 {
                    return None;
                }
                continue;
            }
            if k[d] < -n / 2 || k[d] >= n / 2 {
                return None;
            }
            axes[d] = k[d].rem_euclid(n) as usize;
        }
        Some(self.flat(axes))
    }

    /// Index of -ξ (with wrap-around at the Nyquist frequency).
    pub fn negated_index(&self, index: usize) -> usize {
        let a = self.axes(index);
        let mut b = [0usize; 3];
        for d in 0..self.dims {
            b[d] = (self.n - a[d]) % self.n;
        }
        self.flat(b)
    }

    /// Physical coordinates of a grid point.
    pub fn point(&self, index: usize) -> [f64; 3] {
        let a = self.axes(index);
        let h = 2.0 * PI / self.n as f64;
        let mut x = [0.0; 3];
        for d in 0..self.dims {
            x[d] = a[d] as f64 * h;
        }
        x
    }

    /// True when some axis carries the Nyquist frequency -n/2.
    pub fn has_nyquist(&self, index: usize) -> bool {
        let a = self.axes(index);
        a.iter().take(self.dims).any(|&m| m == self.n / 2)
    }

    /// Cached frequency vectors and radii for every storage index.
    pub fn lattice(&self) -> Arc<Lattice> {
        static CACHE: OnceLock<Mutex<HashMap<GridSpec, Arc<Lattice>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("lattice cache poisoned");
        guard
            .entry(*self)
            .or_insert_with(|| Arc::new(Lattice::build(*self)))
            .clone()
    }
}

#[derive(Debug)]
pub struct Lattice {
    pub freqs: Vec<[i64; 3]>,
    pub radii: Vec<f64>,
    pub nyquist: Vec<bool>,
}

impl Lattice {
    fn build(grid: GridSpec) -> Self {
        let len = grid.len();
        let mut freqs = Vec::with_capacity(len);
        let mut radii = Vec::with_capacity(len);
        let mut nyquist = Vec::with_capacity(len);
        for i in 0..len {
            let k = grid.frequency(i);
            freqs.push(k);
            radii.push(((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt());
            nyquist.push(grid.has_nyquist(i));
        }
        Self { freqs, radii, nyquist }
    }
}

/// Torus distance between two points of [0, 2π)^3.
pub fn torus_distance(x: [f64; 3], y: [f64; 3], dims: usize) -> f64 {
    let l = 2.0 * PI;
    let mut s = 0.0;
    for d in 0..dims {
        let mut dx = (x[d] - y[d]).rem_euclid(l);
        if dx > l / 2.0 {
            dx = l - dx;
        }
        s += dx * dx;
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(GridSpec::new(12, 3).is_err());
        assert!(GridSpec::new(4, 3).is_err());
        assert!(GridSpec::new(16, 4).is_err());
        assert!(GridSpec::new(16, 2).is_ok());
    }

    #[test]
    fn frequency_round_trip() {
        let g = GridSpec::new(8, 3).unwrap();
        for i in 0..g.len() {
            let k = g.frequency(i);
            assert_eq!(g.index_of(k), Some(i));
            assert!(k.iter().all(|&c| (-4..4).contains(&c)));
        }
        assert_eq!(g.index_of([4, 0, 0]), None);
    }

    #[test]
    fn negation_is_involutive() {
        let g = GridSpec::new(8, 2).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.negated_index(g.negated_index(i)), i);
        }
    }
}
