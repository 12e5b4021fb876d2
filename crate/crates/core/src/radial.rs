//! Radial ground states of `−Δu + λu = (|x|^{−α} ∗ |u|^p)|u|^{p−2}u`.
//!
//! Finite volumes on `r_i = i·h`, `i < m`, with `u_m = 0`. The discrete functional is
//! `‖u‖²_λ = Σ c_i (u_{i+1} − u_i)² + λ Σ w_i u_i²` and `D(u) = Σ w_i f_i (G W f)_i`, `f = u^p`,
//! where `w_i` are shell volumes and `G_ij = S(r_i, r_j)/σ` is the shell-averaged kernel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{mp_closed_form, nehari_t};
use crate::fit::least_squares;
use crate::quad::{graded, sphere_area};

#[derive(Debug, Error, PartialEq)]
pub enum RadialError {
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("alpha must lie in (0, {dim}), got {alpha}")]
    Alpha { alpha: f64, dim: usize },
    #[error("negative density {value} at node {node}")]
    Negative { node: usize, value: f64 },
    #[error("fit window [{lo}, {hi}] outside [{min}, {max}]")]
    Window { lo: f64, hi: f64, min: f64, max: f64 },
    #[error("nonpositive value {value} at r = {r} inside the fit window")]
    Nonpositive { r: f64, value: f64 },
    #[error("ground state solve did not converge after {iterations} iterations (grad residual {grad_residual:e}, nehari residual {nehari_residual:e})")]
    NotConverged { iterations: usize, grad_residual: f64, nehari_residual: f64, trace: Vec<RadialTraceRow> },
    #[error("parameters not admissible: {0}")]
    Params(String),
    #[error("degenerate profile: {0}")]
    Degenerate(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialMesh {
    pub dim: usize,
    pub r_max: f64,
    pub m: usize,
}

impl RadialMesh {
    pub fn new(dim: usize, r_max: f64, m: usize) -> Result<Self, RadialError> {
        if dim < 2 {
            return Err(RadialError::Mesh(format!("dim must be >= 2, got {dim}")));
        }
        if m < 16 {
            return Err(RadialError::Mesh(format!("m_nodes must be >= 16, got {m}")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(RadialError::Mesh(format!("r_max must be positive, got {r_max}")));
        }
        Ok(Self { dim, r_max, m })
    }

    pub fn h(&self) -> f64 {
        self.r_max / self.m as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.r(i)).collect()
    }

    fn sigma(&self) -> f64 {
        sphere_area(self.dim)
    }

    /// Shell volumes `w_i = (σ/N)[(r_i + h/2)^N − max(r_i − h/2, 0)^N]`.
    pub fn weights(&self) -> Vec<f64> {
        let (h, n, s) = (self.h(), self.dim as i32, self.sigma());
        (0..self.m)
            .map(|i| {
                let r = self.r(i);
                s / n as f64 * ((r + 0.5 * h).powi(n) - (r - 0.5 * h).max(0.0).powi(n))
            })
            .collect()
    }

    /// Face coefficients `c_i = σ r_{i+1/2}^{N−1}/h` between `u_i` and `u_{i+1}`.
    pub fn faces(&self) -> Vec<f64> {
        let (h, s) = (self.h(), self.sigma());
        (0..self.m).map(|i| s * ((i as f64 + 0.5) * h).powi(self.dim as i32 - 1) / h).collect()
    }
}

/// `S(r, s) = ∫_{S^{N−1}} |r·e − s·ω|^{−α} dω`.
pub fn shell_kernel(dim: usize, alpha: f64, r: f64, s: f64) -> f64 {
    shell_kernel_sep(dim, alpha, r, s, (r - s).abs())
}

/// [`shell_kernel`] with the separation `|r − s|` supplied exactly.
fn shell_kernel_sep(dim: usize, alpha: f64, r: f64, s: f64, sep: f64) -> f64 {
    let sig = sphere_area(dim);
    if r == 0.0 || s == 0.0 {
        return sig * (r + s).powf(-alpha);
    }
    if dim == 3 {
        let big = r.max(s);
        let x = r.min(s) / big;
        if alpha == 2.0 {
            // 2π/(rs)·ln((r+s)/|r−s|)
            let l = if x < 0.5 { x.ln_1p() - (-x).ln_1p() } else { ((r + s) / sep).ln() };
            return 2.0 * PI / (r * s) * l;
        }
        let b = 2.0 - alpha;
        let diff = if x < 0.5 { big.powf(b) * ((b * x.ln_1p()).exp_m1() - (b * (-x).ln_1p()).exp_m1()) } else { (r + s).powf(b) - sep.powf(b) };
        return 2.0 * PI * diff / (b * r * s);
    }
    if dim == 2 && alpha == 1.0 {
        // 4K(k)/(r+s) with K through the arithmetic-geometric mean
        return 2.0 * PI / agm(r + s, sep);
    }
    let lower = sphere_area(dim - 1);
    let d2 = sep * sep;
    let rs4 = 4.0 * r * s;
    let f = |t: f64| (d2 + rs4 * (0.5 * t).sin().powi(2)).powf(-alpha / 2.0) * t.sin().powi(dim as i32 - 2);
    let close = (r.max(s) / sep.max(1e-300)).ln().max(0.0);
    let levels = (close / (1.0f64 / 0.3).ln()).ceil() as usize + 4;
    lower * graded(f, 0.0, PI, 0.3, levels.min(40), 16)
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-15 * a {
            break;
        }
        (a, b) = (0.5 * (a + b), (a * b).sqrt());
    }
    0.5 * (a + b)
}

enum KernelKind {
    /// `N = 3, α = 1`: `1/max(r, s)`, applied by prefix sums. `outer[j]` is the cell average of `1/s`.
    Newton { outer: Vec<f64> },
    /// Row-major `A_ij`.
    Dense(Vec<f64>),
}

/// Shell-averaged Riesz kernel on a radial mesh.
///
/// `A_ij w_j = ∫_{cell j} S(r_i, s) s^{N−1} ds`, so `(A W f)_i` is the potential at `r_i` of the
/// piecewise-constant density. `D` only sees the symmetric part `(A + Aᵀ)/2`.
pub struct ShellKernel {
    mesh: RadialMesh,
    alpha: f64,
    weights: Vec<f64>,
    diag: Vec<f64>,
    kind: KernelKind,
}

const DENSE_LIMIT: usize = 4096;
const DIAG_LEVELS: usize = 30;
const NEAR: usize = 16;

impl ShellKernel {
    pub fn new(mesh: RadialMesh, alpha: f64) -> Result<Self, RadialError> {
        if !(alpha > 0.0 && alpha < mesh.dim as f64) {
            return Err(RadialError::Alpha { alpha, dim: mesh.dim });
        }
        let weights = mesh.weights();
        let h = mesh.h();
        let (n, dim) = (mesh.m, mesh.dim);
        let pw = |s: f64| s.powi(dim as i32 - 1);
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let r = mesh.r(i);
                let g = |s: f64, t: f64| shell_kernel_sep(dim, alpha, r, s, t) * pw(s);
                let lo = (r - 0.5 * h).max(0.0);
                let left = if r > 0.0 { graded(|t| g(r - t, t), 0.0, r - lo, 0.3, DIAG_LEVELS, 16) } else { 0.0 };
                let right = graded(|t| g(r + t, t), 0.0, 0.5 * h, 0.3, DIAG_LEVELS, 16);
                (left + right) / weights[i]
            })
            .collect();
        let kind = if dim == 3 && alpha == 1.0 {
            let outer = (0..n)
                .map(|j| {
                    let (a, b) = ((mesh.r(j) - 0.5 * h).max(0.0), mesh.r(j) + 0.5 * h);
                    1.5 * (b * b - a * a) / (b.powi(3) - a.powi(3))
                })
                .collect();
            KernelKind::Newton { outer }
        } else {
            if n > DENSE_LIMIT {
                return Err(RadialError::Mesh(format!("general (N, alpha) kernels support m <= {DENSE_LIMIT}, got {n}")));
            }
            let near_rule = crate::quad::gauss_legendre(8, -0.5, 0.5);
            let far_rule = crate::quad::gauss_legendre(2, -0.5, 0.5);
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                let r = mesh.r(i);
                for j in 0..n {
                    if i == j {
                        a[i * n + j] = diag[i];
                        continue;
                    }
                    let lo = (mesh.r(j) - 0.5 * h).max(0.0);
                    let hi = mesh.r(j) + 0.5 * h;
                    let g = |s: f64| shell_kernel_sep(dim, alpha, r, s, (r - s).abs()) * pw(s);
                    let integral = if i.abs_diff(j) == 1 {
                        if j > i {
                            graded(|t| g(lo + t), 0.0, hi - lo, 0.3, 20, 8)
                        } else {
                            graded(|t| g(hi - t), 0.0, hi - lo, 0.3, 20, 8)
                        }
                    } else {
                        let rule = if i.abs_diff(j) <= NEAR || i.min(j) <= NEAR { &near_rule } else { &far_rule };
                        let c = 0.5 * (lo + hi);
                        let w = hi - lo;
                        rule.iter().map(|&(x, wt)| wt * g(c + w * x)).sum::<f64>() * w
                    };
                    a[i * n + j] = integral / weights[j];
                }
            }
            KernelKind::Dense(a)
        };
        Ok(Self { mesh, alpha, weights, diag, kind })
    }

    pub fn mesh(&self) -> RadialMesh {
        self.mesh
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Potential `(K ∗ f)(r_i) = Σ_j A_ij w_j f_j`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.apply_inner(f, false)
    }

    /// `Σ_j ½(A_ij + A_ji) w_j f_j`, the operator behind the discrete `D`.
    pub fn apply_sym(&self, f: &[f64]) -> Vec<f64> {
        let a = self.apply_inner(f, false);
        let b = self.apply_inner(f, true);
        a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect()
    }

    fn apply_inner(&self, f: &[f64], transpose: bool) -> Vec<f64> {
        let n = self.mesh.m;
        let wf: Vec<f64> = f.iter().zip(&self.weights).map(|(a, b)| a * b).collect();
        match &self.kind {
            KernelKind::Newton { outer } => {
                // A_ij = 1/r_i for j < i, outer[j] for j > i
                let mut out = vec![0.0; n];
                let mut inner = 0.0;
                for i in 0..n {
                    let lower = if transpose {
                        outer[i]
                    } else if i > 0 {
                        1.0 / self.mesh.r(i)
                    } else {
                        0.0
                    };
                    out[i] = inner * lower;
                    inner += wf[i];
                }
                let mut acc = 0.0;
                for i in (0..n).rev() {
                    out[i] += acc + self.diag[i] * wf[i];
                    acc += wf[i] * if transpose { 1.0 / self.mesh.r(i).max(f64::MIN_POSITIVE) } else { outer[i] };
                }
                out
            }
            KernelKind::Dense(a) => {
                if transpose {
                    let mut out = vec![0.0; n];
                    for j in 0..n {
                        if wf[j] != 0.0 {
                            for (o, v) in out.iter_mut().zip(&a[j * n..(j + 1) * n]) {
                                *o += v * wf[j];
                            }
                        }
                    }
                    out
                } else {
                    (0..n).map(|i| a[i * n..(i + 1) * n].iter().zip(&wf).map(|(x, y)| x * y).sum()).collect()
                }
            }
        }
    }

    /// Potential `Σ_j w_j f_j S(r, r_j)/σ` at an arbitrary radius (no self-cell correction).
    pub fn potential_at(&self, f: &[f64], r: f64) -> f64 {
        let sig = self.mesh.sigma();
        if self.mesh.dim == 3 && self.alpha == 1.0 {
            return f.iter().zip(&self.weights).enumerate().map(|(j, (fj, wj))| fj * wj / r.max(self.mesh.r(j))).sum();
        }
        f.iter()
            .zip(&self.weights)
            .enumerate()
            .filter(|(_, (fj, _))| **fj != 0.0)
            .map(|(j, (fj, wj))| fj * wj * shell_kernel(self.mesh.dim, self.alpha, r, self.mesh.r(j)) / sig)
            .sum()
    }
}

/// `r ↦ (K ∗ f)(r)` for a nonnegative radial density sampled on the mesh.
pub fn radial_convolve(mesh: RadialMesh, f: &[f64], alpha: f64) -> Result<Vec<f64>, RadialError> {
    if let Some((node, &value)) = f.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(RadialError::Negative { node, value });
    }
    if f.len() != mesh.m {
        return Err(RadialError::Mesh(format!("density has {} nodes, mesh has {}", f.len(), mesh.m)));
    }
    Ok(ShellKernel::new(mesh, alpha)?.apply(f))
}

/// Discrete limit functional on one mesh.
pub struct RadialProblem {
    pub mesh: RadialMesh,
    pub alpha: f64,
    pub p: f64,
    pub lambda: f64,
    pub kernel: ShellKernel,
    pub weights: Vec<f64>,
    pub faces: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialEnergies {
    pub kinetic: f64,
    pub mass: f64,
    pub norm2: f64,
    pub d: f64,
    pub j: f64,
}

impl RadialProblem {
    pub fn new(mesh: RadialMesh, alpha: f64, p: f64, lambda: f64) -> Result<Self, RadialError> {
        if !(lambda > 0.0) {
            return Err(RadialError::Params(format!("lambda must be positive, got {lambda}")));
        }
        if !(p >= 2.0 || (p > 1.0 && p.is_finite())) {
            return Err(RadialError::Params(format!("p must exceed 1, got {p}")));
        }
        Ok(Self { kernel: ShellKernel::new(mesh, alpha)?, weights: mesh.weights(), faces: mesh.faces(), mesh, alpha, p, lambda })
    }

    /// `Σ c_i (u_{i+1} − u_i)²` with `u_m = 0`.
    pub fn kinetic(&self, u: &[f64]) -> f64 {
        (0..self.mesh.m)
            .map(|i| {
                let next = if i + 1 < self.mesh.m { u[i + 1] } else { 0.0 };
                self.faces[i] * (next - u[i]).powi(2)
            })
            .sum()
    }

    /// `Σ w_i u_i²`.
    pub fn mass(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.weights).map(|(a, w)| w * a * a).sum()
    }

    pub fn density(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&v| pos_pow(v, self.p)).collect()
    }

    pub fn d(&self, u: &[f64]) -> f64 {
        let f = self.density(u);
        let kf = self.kernel.apply(&f);
        f.iter().zip(&kf).zip(&self.weights).map(|((a, b), w)| w * a * b).sum()
    }

    pub fn energies(&self, u: &[f64]) -> RadialEnergies {
        let kinetic = self.kinetic(u);
        let mass = self.mass(u);
        let norm2 = kinetic + self.lambda * mass;
        let d = self.d(u);
        RadialEnergies { kinetic, mass, norm2, d, j: 0.5 * norm2 - d / (2.0 * self.p) }
    }

    /// Euclidean gradient of the discrete `J` and the energies at `u`.
    pub fn gradient(&self, u: &[f64]) -> (Vec<f64>, RadialEnergies) {
        let n = self.mesh.m;
        let f = self.density(u);
        let kf = self.kernel.apply_sym(&f);
        let mut g = vec![0.0; n];
        for i in 0..n {
            let next = if i + 1 < n { u[i + 1] } else { 0.0 };
            let prev_flux = if i > 0 { self.faces[i - 1] * (u[i] - u[i - 1]) } else { 0.0 };
            g[i] = prev_flux - self.faces[i] * (next - u[i]) + self.lambda * self.weights[i] * u[i] - self.weights[i] * kf[i] * pos_pow(u[i], self.p - 1.0);
        }
        let kinetic = self.kinetic(u);
        let mass = self.mass(u);
        let norm2 = kinetic + self.lambda * mass;
        let d: f64 = f.iter().zip(&kf).zip(&self.weights).map(|((a, b), w)| w * a * b).sum();
        (g, RadialEnergies { kinetic, mass, norm2, d, j: 0.5 * norm2 - d / (2.0 * self.p) })
    }

    /// Solves `(K_s + λW) x = b` (Thomas algorithm).
    pub fn precondition(&self, b: &[f64]) -> Vec<f64> {
        let n = self.mesh.m;
        let diag: Vec<f64> = (0..n).map(|i| self.faces[i] + if i > 0 { self.faces[i - 1] } else { 0.0 } + self.lambda * self.weights[i]).collect();
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = -self.faces[0] / diag[0];
        dp[0] = b[0] / diag[0];
        for i in 1..n {
            let off = -self.faces[i - 1];
            let den = diag[i] - off * cp[i - 1];
            cp[i] = if i + 1 < n { -self.faces[i] / den } else { 0.0 };
            dp[i] = (b[i] - off * dp[i - 1]) / den;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    }
}

fn pos_pow(v: f64, q: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else if q == 2.0 {
        v * v
    } else if q == 1.0 {
        v
    } else {
        v.powf(q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    GroundState,
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialTraceRow {
    pub iter: usize,
    pub j: f64,
    pub grad_residual: f64,
    pub step: f64,
}

/// Sampled radial function with energy and convergence metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub mesh: RadialMesh,
    pub values: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub p: f64,
    pub energy: f64,
    pub norm2: f64,
    pub d: f64,
    pub nehari_residual: f64,
    pub grad_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub source: ProfileSource,
}

impl RadialProfile {
    /// Samples `f` on the mesh; energies are evaluated with the discrete functional.
    pub fn synthetic(mesh: RadialMesh, alpha: f64, p: f64, lambda: f64, f: impl Fn(f64) -> f64) -> Result<Self, RadialError> {
        let prob = RadialProblem::new(mesh, alpha, p, lambda)?;
        let values: Vec<f64> = mesh.nodes().into_iter().map(f).collect();
        let e = prob.energies(&values);
        Ok(Self {
            mesh,
            values,
            lambda,
            alpha,
            p,
            energy: e.j,
            norm2: e.norm2,
            d: e.d,
            nehari_residual: if e.norm2 > 0.0 { (e.norm2 - e.d).abs() / e.norm2 } else { f64::NAN },
            grad_residual: f64::NAN,
            iterations: 0,
            converged: false,
            source: ProfileSource::Synthetic,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.mesh.r_max
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.mesh.nodes()
    }

    /// Linear interpolation; zero beyond the last node's Dirichlet neighbour.
    pub fn eval(&self, r: f64) -> f64 {
        let h = self.mesh.h();
        let s = r / h;
        if s < 0.0 || s >= self.mesh.m as f64 {
            return 0.0;
        }
        let i = s.floor() as usize;
        let t = s - i as f64;
        let a = self.values[i];
        let b = if i + 1 < self.mesh.m { self.values[i + 1] } else { 0.0 };
        a + t * (b - a)
    }

    /// Centered differences, one-sided second-order closure at both ends.
    pub fn derivative(&self) -> Vec<f64> {
        let (u, h, n) = (&self.values, self.mesh.h(), self.mesh.m);
        (0..n)
            .map(|i| {
                if i == 0 {
                    (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
                } else if i == n - 1 {
                    (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h)
                } else {
                    (u[i + 1] - u[i - 1]) / (2.0 * h)
                }
            })
            .collect()
    }

    /// Number of increases after the maximum node (diagnostic; ground states have none).
    pub fn monotonicity_violations(&self) -> usize {
        let imax = self.values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|x| x.0).unwrap_or(0);
        self.values[imax..].windows(2).filter(|w| w[1] > w[0]).count()
    }

    /// Two-column CSV `r,value` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,value\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{},{}\n", crate::fmt17(self.mesh.r(i)), crate::fmt17(*v)));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateConfig {
    pub max_iter: usize,
    pub tol_grad: f64,
    pub armijo_c: f64,
    pub step_min: f64,
    pub step_max: f64,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        Self { max_iter: 5000, tol_grad: 1e-9, armijo_c: 1e-4, step_min: 1e-8, step_max: 4.0 }
    }
}

/// Preconditioned Nehari descent with positivity projection.
pub fn solve_ground_state(lambda: f64, alpha: f64, p: f64, mesh: RadialMesh, cfg: &GroundStateConfig) -> Result<RadialProfile, RadialError> {
    let prob = RadialProblem::new(mesh, alpha, p, lambda)?;
    let nodes = mesh.nodes();
    let mut u: Vec<f64> = nodes.iter().map(|r| (-0.5 * lambda * r * r).exp()).collect();
    let m0 = prob.mass(&u).sqrt();
    u.iter_mut().for_each(|v| *v /= m0);
    let retract = |v: &mut Vec<f64>| -> Option<RadialEnergies> {
        v.iter_mut().for_each(|x| *x = x.max(0.0));
        let e = prob.energies(v);
        if !(e.d > 0.0 && e.norm2 > 0.0) {
            return None;
        }
        let t = nehari_t(e.norm2, e.d, p);
        v.iter_mut().for_each(|x| *x *= t);
        Some(prob.energies(v))
    };
    retract(&mut u).ok_or_else(|| RadialError::Degenerate("initial guess".into()))?;

    let mut trace = Vec::new();
    let mut step = 1.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for iter in 0..cfg.max_iter {
        let (grad, e) = prob.gradient(&u);
        let g = prob.precondition(&grad);
        let gg: f64 = g.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let uu = e.norm2;
        let res = (gg.max(0.0) / uu).sqrt();
        let nehari = (e.norm2 - e.d).abs() / e.norm2;
        let jval = mp_closed_form(e.norm2, e.d, p);
        trace.push(RadialTraceRow { iter, j: jval, grad_residual: res, step });
        if res <= cfg.tol_grad && nehari <= 1e-12 {
            return Ok(RadialProfile {
                mesh,
                values: u,
                lambda,
                alpha,
                p,
                energy: e.j,
                norm2: e.norm2,
                d: e.d,
                nehari_residual: nehari,
                grad_residual: res,
                iterations: iter,
                converged: true,
                source: ProfileSource::GroundState,
            });
        }
        if let Some((pu, pg)) = &prev {
            let su: Vec<f64> = u.iter().zip(pu).map(|(a, b)| a - b).collect();
            let yg: Vec<f64> = g.iter().zip(pg).map(|(a, b)| a - b).collect();
            let ss = m_inner(&prob, &su, &su);
            let sy = m_inner(&prob, &su, &yg);
            if sy > 0.0 {
                step = (ss / sy).clamp(cfg.step_min, cfg.step_max);
            }
        }
        let mut s = step;
        let accepted = loop {
            let mut v: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a - s * b).collect();
            if let Some(ev) = retract(&mut v) {
                let jv = mp_closed_form(ev.norm2, ev.d, p);
                if jv <= jval - cfg.armijo_c * s * gg + 1e-14 * jval.abs() {
                    break Some(v);
                }
            }
            if s <= cfg.step_min {
                break None;
            }
            s = (0.5 * s).max(cfg.step_min);
        };
        match accepted {
            Some(v) => {
                prev = Some((u, g));
                u = v;
                step = s;
            }
            None => {
                return Err(RadialError::NotConverged { iterations: iter, grad_residual: res, nehari_residual: nehari, trace });
            }
        }
    }
    let (grad, e) = prob.gradient(&u);
    let g = prob.precondition(&grad);
    let gg: f64 = g.iter().zip(&grad).map(|(a, b)| a * b).sum();
    Err(RadialError::NotConverged {
        iterations: cfg.max_iter,
        grad_residual: (gg.max(0.0) / e.norm2).sqrt(),
        nehari_residual: (e.norm2 - e.d).abs() / e.norm2,
        trace,
    })
}

fn m_inner(prob: &RadialProblem, a: &[f64], b: &[f64]) -> f64 {
    let n = prob.mesh.m;
    let mut s = 0.0;
    for i in 0..n {
        let an = if i + 1 < n { a[i + 1] } else { 0.0 };
        let bn = if i + 1 < n { b[i + 1] } else { 0.0 };
        s += prob.faces[i] * (an - a[i]) * (bn - b[i]) + prob.lambda * prob.weights[i] * a[i] * b[i];
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub power: f64,
    pub residual: f64,
    pub window: (f64, f64),
}

/// Least squares `log u(r) = c − rate·r − power·log r` over mesh nodes in `window`.
pub fn decay_fit(profile: &RadialProfile, window: (f64, f64)) -> Result<DecayFit, RadialError> {
    decay_fit_values(&profile.mesh, &profile.values, window)
}

/// [`decay_fit`] for arbitrary samples on the mesh (e.g. `|u′|`).
pub fn decay_fit_values(mesh: &RadialMesh, values: &[f64], window: (f64, f64)) -> Result<DecayFit, RadialError> {
    let (min, max) = (0.4 * mesh.r_max, 0.9 * mesh.r_max);
    let (lo, hi) = window;
    if !(lo >= min - 1e-12 && hi <= max + 1e-12 && lo < hi) {
        return Err(RadialError::Window { lo, hi, min, max });
    }
    let mut cols = vec![Vec::new(), Vec::new(), Vec::new()];
    let mut y = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let r = mesh.r(i);
        if r < lo || r > hi {
            continue;
        }
        if !(v > 0.0) {
            return Err(RadialError::Nonpositive { r, value: v });
        }
        cols[0].push(1.0);
        cols[1].push(-r);
        cols[2].push(-r.ln());
        y.push(v.ln());
    }
    let (b, residual) = least_squares(&cols, &y).ok_or_else(|| RadialError::Degenerate("singular decay fit".into()))?;
    Ok(DecayFit { rate: b[1], power: b[2], residual, window })
}
