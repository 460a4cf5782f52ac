//! Unnormalized n-dimensional complex FFTs on row-major cubes.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place FFT of an `n^dims` row-major array. `inverse` selects the
/// `e^{+i}` kernel. No scaling is applied.
pub(crate) fn fft_nd(data: &mut [Complex64], n: usize, dims: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n.pow(dims as u32));
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut block = Vec::new();
    for axis in 0..dims {
        let stride = n.pow((dims - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let span = n * stride;
        block.resize(span, Complex64::new(0.0, 0.0));
        for chunk in data.chunks_mut(span) {
            // chunk is an n x stride matrix; transpose so each FFT line is contiguous
            for m in 0..n {
                for s in 0..stride {
                    block[s * n + m] = chunk[m * stride + s];
                }
            }
            fft.process_with_scratch(&mut block, &mut scratch);
            for m in 0..n {
                for s in 0..stride {
                    chunk[m * stride + s] = block[s * n + m];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn matches_direct_dft_in_2d() {
        let n = 8;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut fast = data.clone();
        fft_nd(&mut fast, n, 2, false);
        for k0 in 0..n {
            for k1 in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..n {
                    for b in 0..n {
                        let ph = -2.0 * PI * ((k0 * a + k1 * b) as f64) / n as f64;
                        acc += data[a * n + b] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((acc - fast[k0 * n + k1]).norm() < 1e-12);
            }
        }
    }
}
