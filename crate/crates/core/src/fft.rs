//! Axis-by-axis complex FFT on cubic `n^d` arrays (row-major, axis 0 slowest).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct FftNd {
    dim: usize,
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftNd {
    pub fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { dim, n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(&self.fwd, data);
    }

    /// Inverse transform including the `1/n^d` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(&self.inv, data);
        let s = 1.0 / self.len() as f64;
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len(), "fft buffer length mismatch");
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for q in 0..stride {
                    for (t, z) in line.iter_mut().enumerate() {
                        *z = data[base + q + t * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (t, z) in line.iter().enumerate() {
                        data[base + q + t * stride] = *z;
                    }
                }
            }
        }
    }
}

/// First-derivative symbol on a periodic box of length `2L`, Nyquist mode zeroed.
pub fn derivative_symbol(n: usize, half_extent: f64) -> Vec<f64> {
    let dk = PI / half_extent;
    (0..n)
        .map(|j| {
            if 2 * j == n {
                0.0
            } else if 2 * j < n {
                dk * j as f64
            } else {
                dk * (j as f64 - n as f64)
            }
        })
        .collect()
}

/// Unravels a flat row-major index into per-axis indices.
pub fn unravel(mut idx: usize, n: usize, dim: usize, out: &mut [usize]) {
    for a in (0..dim).rev() {
        out[a] = idx % n;
        idx /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let f = FftNd::new(3, 6);
        let orig: Vec<Complex64> = (0..216).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut d = orig.clone();
        f.forward(&mut d);
        f.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn matches_direct_dft_2d() {
        let n = 4;
        let f = FftNd::new(2, n);
        let orig: Vec<Complex64> = (0..16).map(|i| Complex64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let mut d = orig.clone();
        f.forward(&mut d);
        for k0 in 0..n {
            for k1 in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for j0 in 0..n {
                    for j1 in 0..n {
                        let ph = -2.0 * PI * ((k0 * j0 + k1 * j1) as f64) / n as f64;
                        s += orig[j0 * n + j1] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((s - d[k0 * n + k1]).norm() < 1e-10);
            }
        }
    }
}
