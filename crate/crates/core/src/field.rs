//! Truncated-box grids, complex fields, potentials and the magnetic norm.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fft::{derivative_symbol, FftNd};

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("grid mismatch: {0:?} vs {1:?}")]
    GridMismatch(Grid, Grid),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("potential V must be positive; min V = {min} at node {node}")]
    NonPositiveV { min: f64, node: usize },
    #[error("potential array has wrong shape: {0}")]
    Shape(String),
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
}

/// Box `[−L, L)^dim` with `n` nodes per axis, `x_i = −L + i·h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub half_extent: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(dim: usize, half_extent: f64, n: usize) -> Result<Self, FieldError> {
        if !(dim == 2 || dim == 3) {
            return Err(FieldError::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(FieldError::InvalidGrid(format!("n must be even and >= 4, got {n}")));
        }
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(FieldError::InvalidGrid(format!("L must be positive, got {half_extent}")));
        }
        Ok(Self { dim, half_extent, n })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// `−L + i·h`, computed as `(i − n/2)·h` so that `x_{n−i} = −x_i` bit for bit.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.h()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.n
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn point(&self, flat: usize, out: &mut [f64]) {
        for (a, x) in out.iter_mut().enumerate().take(self.dim) {
            *x = self.coord(self.axis_index(flat, a));
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| {
            let mut x = vec![0.0; self.dim];
            self.point(i, &mut x);
            x
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut x = vec![0.0; grid.dim];
        let values = (0..grid.len())
            .map(|i| {
                grid.point(i, &mut x);
                f(&x)
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_real(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn check_grid(&self, other: &Grid) -> Result<(), FieldError> {
        if self.grid != *other {
            return Err(FieldError::GridMismatch(self.grid, *other));
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<(), FieldError> {
        match self.values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            Some(i) => Err(FieldError::NonFinite(i)),
            None => Ok(()),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|z| z * s).collect() }
    }

    pub fn scaled_c(&self, s: Complex64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|z| z * s).collect() }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &ComplexField) -> Self {
        Self { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a + b * s).collect() }
    }

    pub fn add(&self, other: &ComplexField) -> Self {
        self.axpy(1.0, other)
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// Max nodewise `|self − other|`.
    pub fn max_diff(&self, other: &ComplexField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Multilinear interpolation at an arbitrary point; zero outside the box.
    pub fn interpolate(&self, x: &[f64]) -> Complex64 {
        let g = &self.grid;
        let h = g.h();
        let half = (g.n / 2) as f64;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..g.dim {
            let s = x[a] / h + half;
            if !(s >= 0.0 && s <= (g.n - 1) as f64) {
                return Complex64::new(0.0, 0.0);
            }
            let i = (s.floor() as usize).min(g.n - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let mut idx = [0usize; 3];
        for corner in 0..(1usize << g.dim) {
            let mut w = 1.0;
            for a in 0..g.dim {
                let bit = (corner >> a) & 1;
                idx[a] = base[a] + bit;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                acc += self.values[g.flat(&idx[..g.dim])] * w;
            }
        }
        acc
    }
}

/// Named vector-potential presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorPotential {
    Zero,
    /// `A = b·(−x_j, x_i)` in the plane `(i, j)`; the complex form `A(z) = i b z`.
    ConstantField {
        strength: f64,
        plane: (usize, usize),
    },
}

impl VectorPotential {
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if let VectorPotential::ConstantField { strength, plane } = self {
            out[plane.0] = -strength * x[plane.1];
            out[plane.1] = strength * x[plane.0];
        }
    }
}

/// Named scalar-potential presets; each carries its limit `V∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarPotential {
    Constant {
        v_inf: f64,
    },
    /// `V∞ − depth·exp(−|x|²/width²)`.
    Well {
        v_inf: f64,
        depth: f64,
        width: f64,
    },
    /// `V∞ − c₀·exp(−κ|x|)`.
    ExpApproach {
        v_inf: f64,
        c0: f64,
        kappa: f64,
    },
    /// `V∞ + amplitude·exp(−|x − center|²/width²)`.
    OffAxisBump {
        v_inf: f64,
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
}

impl ScalarPotential {
    pub fn v_inf(&self) -> f64 {
        match self {
            ScalarPotential::Constant { v_inf }
            | ScalarPotential::Well { v_inf, .. }
            | ScalarPotential::ExpApproach { v_inf, .. }
            | ScalarPotential::OffAxisBump { v_inf, .. } => *v_inf,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match self {
            ScalarPotential::Constant { v_inf } => *v_inf,
            ScalarPotential::Well { v_inf, depth, width } => v_inf - depth * (-r2 / (width * width)).exp(),
            ScalarPotential::ExpApproach { v_inf, c0, kappa } => v_inf - c0 * (-kappa * r2.sqrt()).exp(),
            ScalarPotential::OffAxisBump { v_inf, amplitude, center, width } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                v_inf + amplitude * (-d2 / (width * width)).exp()
            }
        }
    }
}

/// Potentials sampled on a grid. `V > 0` everywhere is enforced at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialPair {
    grid: Grid,
    a: Vec<Vec<f64>>,
    v: Vec<f64>,
    v_inf: f64,
    source: Option<(VectorPotential, ScalarPotential)>,
}

impl PotentialPair {
    /// Samples the presets. On an index-0 plane the node stands for both `x_a = −L` and `x_a = L`,
    /// so the sample is the average over both images; lattice rotations then act exactly.
    pub fn sample(grid: Grid, vector: &VectorPotential, scalar: &ScalarPotential) -> Result<Self, FieldError> {
        let mut a = vec![vec![0.0; grid.len()]; grid.dim];
        let mut v = vec![0.0; grid.len()];
        let mut x = vec![0.0; grid.dim];
        let mut y = vec![0.0; grid.dim];
        let mut av = vec![0.0; grid.dim];
        for i in 0..grid.len() {
            grid.point(i, &mut x);
            let edges: Vec<usize> = (0..grid.dim).filter(|&d| grid.axis_index(i, d) == 0).collect();
            let images = 1usize << edges.len();
            for mask in 0..images {
                y.copy_from_slice(&x);
                for (b, &d) in edges.iter().enumerate() {
                    if mask & (1 << b) != 0 {
                        y[d] = grid.half_extent;
                    }
                }
                vector.eval(&y, &mut av);
                for d in 0..grid.dim {
                    a[d][i] += av[d] / images as f64;
                }
                v[i] += scalar.eval(&y) / images as f64;
            }
        }
        let mut pair = Self::from_arrays(grid, a, v, scalar.v_inf())?;
        pair.source = Some((vector.clone(), scalar.clone()));
        Ok(pair)
    }

    pub fn from_arrays(grid: Grid, a: Vec<Vec<f64>>, v: Vec<f64>, v_inf: f64) -> Result<Self, FieldError> {
        if a.len() != grid.dim || a.iter().any(|c| c.len() != grid.len()) || v.len() != grid.len() {
            return Err(FieldError::Shape(format!("expected {} components of length {}", grid.dim, grid.len())));
        }
        if let Some((node, &min)) = v.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).filter(|(_, &m)| !(m > 0.0)) {
            return Err(FieldError::NonPositiveV { min, node });
        }
        if !(v_inf > 0.0) {
            return Err(FieldError::NonPositiveV { min: v_inf, node: usize::MAX });
        }
        Ok(Self { grid, a, v, v_inf, source: None })
    }

    /// Constant `V ≡ λ`, `A = 0`.
    pub fn constant(grid: Grid, lambda: f64) -> Result<Self, FieldError> {
        Self::sample(grid, &VectorPotential::Zero, &ScalarPotential::Constant { v_inf: lambda })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }
    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }
    pub fn v(&self) -> &[f64] {
        &self.v
    }
    pub fn v_inf(&self) -> f64 {
        self.v_inf
    }
    pub fn source(&self) -> Option<&(VectorPotential, ScalarPotential)> {
        self.source.as_ref()
    }

    /// `(A + ∇φ, V)` with `∇φ` supplied per node.
    pub fn gauge_shifted(&self, grad_phi: &[Vec<f64>]) -> Result<Self, FieldError> {
        let a = self.a.iter().zip(grad_phi).map(|(c, g)| c.iter().zip(g).map(|(x, y)| x + y).collect()).collect();
        Self::from_arrays(self.grid, a, self.v.clone(), self.v_inf)
    }
}

/// Spectral derivative machinery bound to one grid.
pub struct Spectral {
    grid: Grid,
    fft: FftNd,
    k: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        Self { grid, fft: FftNd::new(grid.dim, grid.n), k: derivative_symbol(grid.n, grid.half_extent) }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `Σ_a k̃_a²` at flat spectral index `i`.
    fn k2(&self, i: usize) -> f64 {
        (0..self.grid.dim).map(|a| self.k[self.grid.axis_index(i, a)].powi(2)).sum()
    }

    /// Spectral gradient, one array per axis.
    pub fn gradient(&self, u: &[Complex64]) -> Vec<Vec<Complex64>> {
        let mut hat = u.to_vec();
        self.fft.forward(&mut hat);
        (0..self.grid.dim)
            .map(|a| {
                let mut d: Vec<Complex64> = hat.iter().enumerate().map(|(i, z)| z * Complex64::new(0.0, self.k[self.grid.axis_index(i, a)])).collect();
                self.fft.inverse(&mut d);
                d
            })
            .collect()
    }

    /// `Σ_a D_a f_a`.
    pub fn divergence(&self, f: &[Vec<Complex64>]) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for (a, comp) in f.iter().enumerate() {
            let mut hat = comp.clone();
            self.fft.forward(&mut hat);
            for (i, z) in hat.iter().enumerate() {
                acc[i] += z * Complex64::new(0.0, self.k[self.grid.axis_index(i, a)]);
            }
        }
        self.fft.inverse(&mut acc);
        acc
    }

    /// Solves `(−Δ̃ + σ) g = r` where `−Δ̃ = Σ_a D_a^* D_a`.
    pub fn solve_shifted(&self, r: &[Complex64], sigma: f64) -> Vec<Complex64> {
        let mut hat = r.to_vec();
        self.fft.forward(&mut hat);
        for (i, z) in hat.iter_mut().enumerate() {
            *z /= self.k2(i) + sigma;
        }
        self.fft.inverse(&mut hat);
        hat
    }

    /// `(−Δ̃ + σ) v`.
    pub fn apply_shifted(&self, v: &[Complex64], sigma: f64) -> Vec<Complex64> {
        let mut hat = v.to_vec();
        self.fft.forward(&mut hat);
        for (i, z) in hat.iter_mut().enumerate() {
            *z *= self.k2(i) + sigma;
        }
        self.fft.inverse(&mut hat);
        hat
    }

    /// `⟨u, v⟩_σ = Re Σ (Σ_a D_a u · conj(D_a v) + σ u·conj v) h^d`, evaluated by Parseval.
    pub fn sigma_inner(&self, u: &[Complex64], v: &[Complex64], sigma: f64) -> f64 {
        let mut uh = u.to_vec();
        let mut vh = v.to_vec();
        self.fft.forward(&mut uh);
        self.fft.forward(&mut vh);
        let s: f64 = uh.iter().zip(&vh).enumerate().map(|(i, (a, b))| (self.k2(i) + sigma) * (a * b.conj()).re).sum();
        s * self.grid.cell_volume() / self.grid.len() as f64
    }

    /// `∇u + iAu`.
    pub fn covariant_gradient(&self, u: &[Complex64], a: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
        let mut g = self.gradient(u);
        for (comp, acomp) in g.iter_mut().zip(a) {
            for ((z, &ai), &ui) in comp.iter_mut().zip(acomp).zip(u) {
                *z += Complex64::new(0.0, ai) * ui;
            }
        }
        g
    }

    /// Fraction of spectral energy carried by modes with some `|k_a|` above two thirds of Nyquist.
    pub fn spectral_tail(&self, u: &[Complex64]) -> f64 {
        let mut hat = u.to_vec();
        self.fft.forward(&mut hat);
        let kmax = std::f64::consts::PI / self.grid.h();
        let (mut tail, mut total) = (0.0, 0.0);
        for (i, z) in hat.iter().enumerate() {
            let e = z.norm_sqr();
            total += e;
            if (0..self.grid.dim).any(|a| {
                let j = self.grid.axis_index(i, a);
                let kj = if 2 * j <= self.grid.n { j as f64 } else { j as f64 - self.grid.n as f64 };
                (kj * std::f64::consts::PI / self.grid.half_extent).abs() > 2.0 * kmax / 3.0
            }) {
                tail += e;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }
}

/// `∇_A u = ∇u + iAu` with spectral `∇`.
pub fn covariant_gradient(u: &ComplexField, pot: &PotentialPair) -> Result<Vec<ComplexField>, FieldError> {
    u.check_grid(&pot.grid)?;
    let sp = Spectral::new(u.grid);
    Ok(sp.covariant_gradient(&u.values, &pot.a).into_iter().map(|values| ComplexField { grid: u.grid, values }).collect())
}

/// `⟨u, v⟩_{A,V} = Re Σ (∇_A u · conj ∇_A v + V u conj v) h^d`.
pub fn inner_av(u: &ComplexField, v: &ComplexField, pot: &PotentialPair) -> Result<f64, FieldError> {
    u.check_grid(&pot.grid)?;
    v.check_grid(&pot.grid)?;
    let sp = Spectral::new(u.grid);
    Ok(inner_av_with(&sp, &u.values, &v.values, pot))
}

pub(crate) fn inner_av_with(sp: &Spectral, u: &[Complex64], v: &[Complex64], pot: &PotentialPair) -> f64 {
    let gu = sp.covariant_gradient(u, &pot.a);
    let gv = if std::ptr::eq(u, v) { gu.clone() } else { sp.covariant_gradient(v, &pot.a) };
    let mut s = 0.0;
    for i in 0..u.len() {
        for a in 0..gu.len() {
            s += (gu[a][i] * gv[a][i].conj()).re;
        }
        s += pot.v[i] * (u[i] * v[i].conj()).re;
    }
    s * sp.grid.cell_volume()
}

pub fn norm_av(u: &ComplexField, pot: &PotentialPair) -> Result<f64, FieldError> {
    Ok(inner_av(u, u, pot)?.max(0.0).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct DiamagneticReport {
    /// `‖∇|u|‖_{L²}` with spectral `∇`.
    pub lhs: f64,
    /// `‖∇_A u‖_{L²}`.
    pub rhs: f64,
    /// `‖D|u| − Re(ū·Du)/|u|‖_{L²}`: spectral vs a.e. formula for `∇|u|`.
    pub tol_disc: f64,
    pub margin: f64,
    pub holds: bool,
    pub spectral_tail: f64,
}

/// Integrated diamagnetic inequality `‖∇|u|‖ ≤ ‖∇_A u‖`.
pub fn diamagnetic_check(u: &ComplexField, a: &[Vec<f64>]) -> DiamagneticReport {
    let sp = Spectral::new(u.grid);
    let dv = u.grid.cell_volume();
    let modulus: Vec<Complex64> = u.values.iter().map(|z| Complex64::new(z.norm(), 0.0)).collect();
    let gm = sp.gradient(&modulus);
    let gu = sp.gradient(&u.values);
    let ga = sp.covariant_gradient(&u.values, a);
    let floor = 1e-300;
    let (mut lhs, mut rhs, mut err) = (0.0, 0.0, 0.0);
    for i in 0..u.values.len() {
        let m = modulus[i].re;
        for d in 0..u.grid.dim {
            lhs += gm[d][i].re.powi(2);
            rhs += ga[d][i].norm_sqr();
            let ae = if m > floor { (u.values[i].conj() * gu[d][i]).re / m } else { 0.0 };
            err += (gm[d][i].re - ae).powi(2);
        }
    }
    let (lhs, rhs, tol_disc) = ((lhs * dv).sqrt(), (rhs * dv).sqrt(), (err * dv).sqrt());
    let margin = rhs + tol_disc - lhs;
    DiamagneticReport { lhs, rhs, tol_disc, margin, holds: margin >= 0.0, spectral_tail: sp.spectral_tail(&u.values) }
}

/// Sum of a few complex Gaussians with seeded random centers, widths and phases.
pub fn random_smooth(grid: Grid, seed: u64, bumps: usize, spread: f64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<(Vec<f64>, f64, Complex64, Vec<f64>)> = (0..bumps)
        .map(|_| {
            let c: Vec<f64> = (0..grid.dim).map(|_| rng.gen_range(-spread..spread)).collect();
            let w = rng.gen_range(0.8..1.6);
            let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let k: Vec<f64> = (0..grid.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (c, w, amp, k)
        })
        .collect();
    ComplexField::from_fn(grid, |x| {
        params
            .iter()
            .map(|(c, w, amp, k)| {
                let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                let ph: f64 = x.iter().zip(k).map(|(a, b)| a * b).sum();
                amp * Complex64::from_polar((-d2 / (w * w)).exp(), ph)
            })
            .sum()
    })
}
