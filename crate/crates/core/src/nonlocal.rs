//! Riesz-potential convolution `K ∗ f` with `K(x) = |x|^{−α}`, the double integral `D(u)` and its derivative.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::epstein::{cube_cell_average, lattice_zeta};
use crate::fft::FftNd;
use crate::field::{ComplexField, Grid};

#[derive(Debug, Error, PartialEq)]
pub enum NonlocalError {
    #[error("alpha must lie in (0, {dim}), got {alpha}")]
    Alpha { alpha: f64, dim: usize },
    #[error("field length {got} does not match the kernel grid ({expected} nodes)")]
    GridMismatch { got: usize, expected: usize },
    #[error("the derivative pairing needs p >= 2, got p = {0}")]
    PBelowTwo(f64),
}

/// How the singular origin cell of the tabulated kernel is weighted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginRule {
    /// `−Z_d(α)·h^{−α}`, the lattice zeta correction of the punctured trapezoid sum.
    #[default]
    LatticeZeta,
    /// Average of `|x|^{−α}` over the origin cell.
    CellAverage,
}

impl OriginRule {
    pub fn origin_value(self, dim: usize, alpha: f64, h: f64) -> f64 {
        match self {
            OriginRule::LatticeZeta => -lattice_zeta(dim, alpha) * h.powf(-alpha),
            OriginRule::CellAverage => cube_cell_average(dim, alpha, h),
        }
    }
}

/// Kernel tabulated with minimum-image offsets on the periodic box; its spectrum drives
/// circular convolution, so the discrete `D` shares the torus geometry of the kinetic term.
pub struct RieszKernel {
    alpha: f64,
    grid: Grid,
    rule: OriginRule,
    origin_value: f64,
    fft: FftNd,
    spectrum: Vec<f64>,
}

/// Minimum-image representative of a lattice offset on an `n`-periodic axis.
pub fn min_image(o: i64, n: usize) -> i64 {
    let n = n as i64;
    let r = o.rem_euclid(n);
    if r <= n / 2 {
        r
    } else {
        r - n
    }
}

impl RieszKernel {
    pub fn new(grid: Grid, alpha: f64, rule: OriginRule) -> Result<Self, NonlocalError> {
        if !(alpha > 0.0 && alpha < grid.dim as f64) {
            return Err(NonlocalError::Alpha { alpha, dim: grid.dim });
        }
        let h = grid.h();
        let origin_value = rule.origin_value(grid.dim, alpha, h);
        let fft = FftNd::new(grid.dim, grid.n);
        let mut off = vec![0i64; grid.dim];
        let mut tab: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                for (a, o) in off.iter_mut().enumerate() {
                    *o = min_image(grid.axis_index(i, a) as i64, grid.n);
                }
                Complex64::new(kernel_value(&off, alpha, h, origin_value), 0.0)
            })
            .collect();
        fft.forward(&mut tab);
        let spectrum = tab.into_iter().map(|z| z.re).collect();
        Ok(Self { alpha, grid, rule, origin_value, fft, spectrum })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn grid(&self) -> Grid {
        self.grid
    }
    pub fn rule(&self) -> OriginRule {
        self.rule
    }
    pub fn origin_value(&self) -> f64 {
        self.origin_value
    }

    /// Tabulated value at lattice displacement `offset·h` (offsets taken by minimum image).
    pub fn value(&self, offset: &[i64]) -> f64 {
        let o: Vec<i64> = offset.iter().map(|&v| min_image(v, self.grid.n)).collect();
        kernel_value(&o, self.alpha, self.grid.h(), self.origin_value)
    }

    /// `Σ_y K(x − y) f(y) h^d` by circular FFT.
    pub fn convolve(&self, f: &[f64]) -> Result<Vec<f64>, NonlocalError> {
        let g = self.grid;
        if f.len() != g.len() {
            return Err(NonlocalError::GridMismatch { got: f.len(), expected: g.len() });
        }
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        for (z, s) in buf.iter_mut().zip(&self.spectrum) {
            *z *= s;
        }
        self.fft.inverse(&mut buf);
        let dv = g.cell_volume();
        Ok(buf.into_iter().map(|z| z.re * dv).collect())
    }
}

fn kernel_value(offset: &[i64], alpha: f64, h: f64, origin: f64) -> f64 {
    let n2: i64 = offset.iter().map(|o| o * o).sum();
    if n2 == 0 {
        origin
    } else {
        ((n2 as f64).sqrt() * h).powf(-alpha)
    }
}

pub fn riesz_convolve(f: &[f64], kernel: &RieszKernel) -> Result<Vec<f64>, NonlocalError> {
    kernel.convolve(f)
}

/// `|u|^p` nodewise.
pub fn abs_pow(u: &ComplexField, p: f64) -> Vec<f64> {
    u.values.iter().map(|z| pow_abs(z.norm(), p)).collect()
}

fn pow_abs(m: f64, p: f64) -> f64 {
    if p == 2.0 {
        m * m
    } else if m == 0.0 {
        0.0
    } else {
        m.powf(p)
    }
}

/// `|u|^{p−2}u`, continuously extended by `0` at zeros of `u`.
pub fn twisted_power(z: Complex64, p: f64) -> Complex64 {
    if p == 2.0 {
        z
    } else {
        let m = z.norm();
        if m == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            z * m.powf(p - 2.0)
        }
    }
}

fn check(u: &ComplexField, kernel: &RieszKernel) -> Result<(), NonlocalError> {
    if u.grid != kernel.grid {
        return Err(NonlocalError::GridMismatch { got: u.values.len(), expected: kernel.grid.len() });
    }
    Ok(())
}

/// `D(u) = Σ_x (K ∗ |u|^p)(x)·|u(x)|^p·h^d`.
pub fn d_value(u: &ComplexField, p: f64, kernel: &RieszKernel) -> Result<f64, NonlocalError> {
    check(u, kernel)?;
    let f = abs_pow(u, p);
    let c = kernel.convolve(&f)?;
    Ok(c.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>() * u.grid.cell_volume())
}

/// `d/dt D(u + tv)|_{t=0} = 2p·Re Σ (K ∗ |u|^p)|u|^{p−2}u·conj(v)·h^d`.
pub fn d_prime_pairing(u: &ComplexField, v: &ComplexField, p: f64, kernel: &RieszKernel) -> Result<f64, NonlocalError> {
    if p < 2.0 {
        return Err(NonlocalError::PBelowTwo(p));
    }
    check(u, kernel)?;
    check(v, kernel)?;
    let c = kernel.convolve(&abs_pow(u, p))?;
    let s: f64 = (0..u.values.len()).map(|i| c[i] * (twisted_power(u.values[i], p) * v.values[i].conj()).re).sum();
    Ok(2.0 * p * s * u.grid.cell_volume())
}

#[derive(Clone, Debug, Serialize)]
pub struct HlsReport {
    pub d_value: f64,
    /// `‖u‖_{L^{pr}}^{2p}`.
    pub lpr_power: f64,
    pub ratio: f64,
    /// `K_const·‖u‖^{2p}_{pr}` when a constant is configured.
    pub bound: Option<f64>,
    pub finite: bool,
}

/// Tracks `D(u)` against `‖u‖_{L^{pr}}^{2p}`, `r = 2N/(2N − α)`; no sharp constant is assumed.
pub fn hls_check(u: &ComplexField, p: f64, kernel: &RieszKernel, k_const: Option<f64>) -> Result<HlsReport, NonlocalError> {
    let d = d_value(u, p, kernel)?;
    let n = u.grid.dim as f64;
    let pr = p * 2.0 * n / (2.0 * n - kernel.alpha);
    let s: f64 = u.values.iter().map(|z| pow_abs(z.norm(), pr)).sum::<f64>() * u.grid.cell_volume();
    let lpr_power = s.powf(2.0 * p / pr);
    let ratio = if lpr_power > 0.0 { d / lpr_power } else { 0.0 };
    Ok(HlsReport { d_value: d, lpr_power, ratio, bound: k_const.map(|k| k * lpr_power), finite: d.is_finite() && lpr_power.is_finite() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_even_and_positive() {
        let g = Grid::new(3, 3.0, 8).unwrap();
        let k = RieszKernel::new(g, 1.0, OriginRule::LatticeZeta).unwrap();
        assert_eq!(k.value(&[1, -2, 3]), k.value(&[-1, 2, -3]));
        assert!(k.origin_value() > 0.0);
        let k2 = RieszKernel::new(g, 1.0, OriginRule::CellAverage).unwrap();
        assert!(k2.origin_value() > 0.0);
    }

    #[test]
    fn convolution_wraps_by_minimum_image() {
        let g = Grid::new(2, 4.0, 8).unwrap();
        let k = RieszKernel::new(g, 1.0, OriginRule::LatticeZeta).unwrap();
        let mut f = vec![0.0; g.len()];
        f[g.flat(&[0, 0])] = 1.0;
        let out = k.convolve(&f).unwrap();
        let expect = g.cell_volume() / g.h();
        assert!((out[g.flat(&[7, 0])] - expect).abs() < 1e-12);
        assert!((out[g.flat(&[0, 7])] - out[g.flat(&[0, 1])]).abs() < 1e-12);
        assert_eq!(min_image(-4, 8), 4);
        assert_eq!(min_image(5, 8), -3);
    }

    #[test]
    fn alpha_out_of_range() {
        let g = Grid::new(2, 3.0, 8).unwrap();
        assert!(RieszKernel::new(g, 2.0, OriginRule::LatticeZeta).is_err());
    }

    #[test]
    fn delta_source() {
        let g = Grid::new(3, 4.0, 8).unwrap();
        let k = RieszKernel::new(g, 1.5, OriginRule::LatticeZeta).unwrap();
        let mut f = vec![0.0; g.len()];
        let c = g.flat(&[4, 4, 4]);
        f[c] = 2.0;
        let out = k.convolve(&f).unwrap();
        let dv = g.cell_volume();
        for i in 0..g.len() {
            if i == c {
                continue;
            }
            let mut x = [0.0; 3];
            g.point(i, &mut x);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let expect = 2.0 * dv / r.powf(1.5);
            assert!((out[i] - expect).abs() <= 1e-12 * expect.max(1.0));
        }
    }
}
