//! Cut-off ground states, their τ-phased orbit sums and the energy-threshold certificate.
//!
//! The certificate is evaluated on the radial mesh of the base profile. Every small quantity
//! (cut-off losses, the potential gain, the D change) is computed as a direct sum over the
//! nodes where it lives, so gaps far below the energy scale keep their relative accuracy.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::energy::EnergyContext;
use crate::field::{ComplexField, Grid};
use crate::fit::{least_squares, log_linear_rate};
use crate::params::{delta_tau, ProblemParams};
use crate::quad::{gauss_legendre, SphereRule};
use crate::radial::{decay_fit_values, ProfileSource, RadialError, RadialProblem, RadialProfile};
use crate::symmetry::{SymmetryError, SymmetrySpec};

#[derive(Debug, Error)]
pub enum MultibumpError {
    #[error("cut-off radius must be positive, got {0}")]
    Radius(f64),
    #[error("epsilon {eps} outside (0, {hi})")]
    Epsilon { eps: f64, hi: f64 },
    #[error("kappa {kappa} violates 0 < kappa < 2·delta_tau·sqrt(mu) = {bound}")]
    Kappa { kappa: f64, bound: f64 },
    #[error("R_y = {r_y} outside (0, delta_tau·|y|) = (0, {bound})")]
    PlanRadius { r_y: f64, bound: f64 },
    #[error("bumps {a} and {b} overlap: center distance {dist} <= 2·R_y = {two_r}")]
    Overlap { a: usize, b: usize, dist: f64, two_r: f64 },
    #[error("bump support reaches {reach}, grid allows {limit} (padding 2h)")]
    Padding { reach: f64, limit: f64 },
    #[error("R = {r} exceeds the profile domain r_max = {r_max}")]
    Domain { r: f64, r_max: f64 },
    #[error("profile decay rate {rate} is below sqrt(mu) = {sqrt_mu}")]
    SlowDecay { rate: f64, sqrt_mu: f64 },
    #[error("(H2) fails at node {node} (|x| = {radius}): |A|²+V = {lhs} > {rhs}")]
    H2 { node: usize, radius: f64, lhs: f64, rhs: f64 },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

/// `χ_ε(t)`: 1 on `[0, 1−ε]`, 0 on `[1, ∞)`, `1 − 3s² + 2s³` in `s = (t − 1 + ε)/ε` between.
pub fn chi(t: f64, eps: f64) -> f64 {
    if t <= 1.0 - eps {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let s = (t - 1.0 + eps) / eps;
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

fn check_cut(r: f64, eps: f64) -> Result<(), MultibumpError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(MultibumpError::Radius(r));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MultibumpError::Epsilon { eps, hi: 1.0 });
    }
    Ok(())
}

/// `u ↦ u^R = χ(|x|/R)·u`.
pub trait Cutoff: Sized {
    fn cutoff(&self, r: f64, eps: f64) -> Result<Self, MultibumpError>;
}

impl Cutoff for ComplexField {
    fn cutoff(&self, r: f64, eps: f64) -> Result<Self, MultibumpError> {
        check_cut(r, eps)?;
        let mut x = vec![0.0; self.grid.dim];
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, z)| {
                self.grid.point(i, &mut x);
                z * chi(x.iter().map(|v| v * v).sum::<f64>().sqrt() / r, eps)
            })
            .collect();
        Ok(ComplexField { grid: self.grid, values })
    }
}

impl Cutoff for RadialProfile {
    /// The result is tagged synthetic; its energies are re-evaluated on the same mesh.
    fn cutoff(&self, r: f64, eps: f64) -> Result<Self, MultibumpError> {
        check_cut(r, eps)?;
        let mesh = self.mesh;
        let vals = cut_values(self, r, eps);
        let mut out = RadialProfile::synthetic(mesh, self.alpha, self.p, self.lambda, |_| 0.0)?;
        let prob = RadialProblem::new(mesh, self.alpha, self.p, self.lambda)?;
        let e = prob.energies(&vals);
        out.values = vals;
        out.energy = e.j;
        out.norm2 = e.norm2;
        out.d = e.d;
        out.nehari_residual = if e.norm2 > 0.0 { (e.norm2 - e.d).abs() / e.norm2 } else { f64::NAN };
        out.source = ProfileSource::Synthetic;
        Ok(out)
    }
}

fn cut_values(profile: &RadialProfile, r: f64, eps: f64) -> Vec<f64> {
    profile.values.iter().enumerate().map(|(i, v)| v * chi(profile.mesh.r(i) / r, eps)).collect()
}

/// Differences between a profile and its cut-offs on the profile's own mesh.
struct CutDeltas {
    /// `D(ω) − D(ω^R)`.
    d: f64,
    /// `∫ ||∇ω|² − |∇ω^R|²|`.
    grad: f64,
    /// `∫ |∇ω^R|² − |∇ω|²` (signed).
    kinetic: f64,
    /// `∫ (ω^R)² − ω²`.
    mass: f64,
}

fn cut_deltas(prob: &RadialProblem, u: &[f64], v: &[f64]) -> CutDeltas {
    let m = prob.mesh.m;
    let (mut grad, mut kinetic) = (0.0, 0.0);
    for i in 0..m {
        let du = if i + 1 < m { u[i + 1] } else { 0.0 } - u[i];
        let dv = if i + 1 < m { v[i + 1] } else { 0.0 } - v[i];
        if du != dv {
            let diff = prob.faces[i] * (dv * dv - du * du);
            grad += diff.abs();
            kinetic += diff;
        }
    }
    let mass = u.iter().zip(v).zip(&prob.weights).filter(|((a, b), _)| a != b).map(|((a, b), w)| w * (b * b - a * a)).sum();
    // D(a) − D(b) = B(fa − fb, fa + fb) for the symmetric bilinear form B
    let fa = prob.density(u);
    let fb = prob.density(v);
    let diff: Vec<f64> = fa.iter().zip(&fb).map(|(a, b)| a - b).collect();
    let d = if diff.iter().all(|x| *x == 0.0) {
        0.0
    } else {
        let kd = prob.kernel.apply_sym(&diff);
        fa.iter().zip(&fb).zip(&kd).zip(&prob.weights).map(|(((a, b), k), w)| w * (a + b) * k).sum()
    };
    CutDeltas { d, grad, kinetic, mass }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutoffScanRow {
    pub r: f64,
    pub delta_d: f64,
    pub delta_grad: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutoffScan {
    pub mu: f64,
    pub eps: f64,
    pub p: f64,
    pub rows: Vec<CutoffScanRow>,
    /// Fitted exponential rates; `None` when fewer than three rows are nonzero.
    pub d_slope: Option<f64>,
    pub grad_slope: Option<f64>,
    /// `p√μ(1−ε)` and `2√μ(1−ε)`.
    pub d_target: f64,
    pub grad_target: f64,
    /// Both slopes `≥ 0.9·target`.
    pub pass: bool,
}

/// Fits `log y = c − rate·R − β log R`; the power term absorbs the algebraic prefactor.
pub fn exp_rate_with_power(r: &[f64], y: &[f64]) -> Option<f64> {
    let (rs, ls): (Vec<f64>, Vec<f64>) = r.iter().zip(y).filter(|(_, v)| **v > 0.0).map(|(a, b)| (*a, b.ln())).unzip();
    if rs.len() < 3 {
        return None;
    }
    let cols = vec![vec![1.0; rs.len()], rs.iter().map(|v| -v).collect(), rs.iter().map(|v| -v.ln()).collect()];
    least_squares(&cols, &ls).map(|(b, _)| b[1])
}

/// Tabulates `|D(ω) − D(ω^R)|` and the gradient defect over `r_list`, then fits both rates.
pub fn cutoff_decay_scan(profile: &RadialProfile, mu: f64, eps: f64, r_list: &[f64]) -> Result<CutoffScan, MultibumpError> {
    if !(mu > 0.0) {
        return Err(MultibumpError::Config(format!("mu must be positive, got {mu}")));
    }
    let r_max = profile.r_max();
    for &r in r_list {
        check_cut(r, eps)?;
        if r > r_max {
            return Err(MultibumpError::Domain { r, r_max });
        }
    }
    if let Some((node, &value)) = profile.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(RadialError::Negative { node, value }.into());
    }
    // an exactly vanishing tail decays faster than any rate
    match decay_fit_values(&profile.mesh, &profile.values, (0.5 * r_max, 0.85 * r_max)) {
        Ok(fit) if fit.rate < 0.98 * mu.sqrt() => return Err(MultibumpError::SlowDecay { rate: fit.rate, sqrt_mu: mu.sqrt() }),
        Ok(_) | Err(RadialError::Nonpositive { value: 0.0, .. }) => {}
        Err(e) => return Err(e.into()),
    }
    let prob = RadialProblem::new(profile.mesh, profile.alpha, profile.p, profile.lambda)?;
    let rows: Vec<CutoffScanRow> = r_list
        .iter()
        .map(|&r| {
            let cut = cut_values(profile, r, eps);
            let d = cut_deltas(&prob, &profile.values, &cut);
            CutoffScanRow { r, delta_d: d.d.abs(), delta_grad: d.grad }
        })
        .collect();
    let rs: Vec<f64> = rows.iter().map(|x| x.r).collect();
    let d_slope = exp_rate_with_power(&rs, &rows.iter().map(|x| x.delta_d).collect::<Vec<_>>());
    let grad_slope = exp_rate_with_power(&rs, &rows.iter().map(|x| x.delta_grad).collect::<Vec<_>>());
    let s = mu.sqrt() * (1.0 - eps);
    let (d_target, grad_target) = (profile.p * s, 2.0 * s);
    let pass = matches!((d_slope, grad_slope), (Some(a), Some(b)) if a >= 0.9 * d_target && b >= 0.9 * grad_target);
    Ok(CutoffScan { mu, eps, p: profile.p, rows, d_slope, grad_slope, d_target, grad_target, pass })
}

/// `R_y = [(κ + 2δ√μ)/(4δ√μ)]·δ|y|`.
pub fn r_y(kappa: f64, delta_tau: f64, mu: f64, y_norm: f64) -> Result<f64, MultibumpError> {
    let b = 2.0 * delta_tau * mu.sqrt();
    if !(kappa > 0.0 && kappa < b) {
        return Err(MultibumpError::Kappa { kappa, bound: b });
    }
    if !(y_norm > 0.0) {
        return Err(MultibumpError::Config(format!("|y| must be positive, got {y_norm}")));
    }
    Ok((kappa + b) / (2.0 * b) * delta_tau * y_norm)
}

/// `μ = V∞(1 − κ/(4δ√V∞))²`; when that misses `κ < 2δ√μ`, the midpoint of the admissible `√μ` range.
pub fn choose_mu(v_inf: f64, kappa: f64, delta_tau: f64) -> Result<f64, MultibumpError> {
    let sv = v_inf.sqrt();
    let lo = kappa / (2.0 * delta_tau);
    if !(kappa > 0.0 && lo < sv) {
        return Err(MultibumpError::Kappa { kappa, bound: 2.0 * delta_tau * sv });
    }
    let s = sv - kappa / (4.0 * delta_tau);
    let s = if s > lo && s < sv { s } else { 0.5 * (lo + sv) };
    Ok(s * s)
}

/// Upper end of the admissible `ε` window, `(2δ√μ − κ)/(2δ√μ + κ)`.
pub fn eps_bound(kappa: f64, delta_tau: f64, mu: f64) -> f64 {
    let b = 2.0 * delta_tau * mu.sqrt();
    (b - kappa) / (b + kappa)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BumpPlan {
    /// `ω_∞`, the limit ground state for `λ = V∞`.
    pub profile: RadialProfile,
    pub spec: SymmetrySpec,
    pub y: Vec<f64>,
    pub r_y: f64,
    pub eps: f64,
    pub mu: f64,
    pub kappa: f64,
    pub delta_tau: f64,
}

impl BumpPlan {
    /// Places `y = ϱ₀·e_a` on the first axis of the rotation plane and derives `μ`, `R_y`.
    pub fn new(profile: RadialProfile, spec: SymmetrySpec, params: &ProblemParams, rho0: f64) -> Result<Self, MultibumpError> {
        let delta = delta_tau(&spec)?;
        let mu = choose_mu(params.v_inf, params.kappa, delta)?;
        let mut y = vec![0.0; profile.mesh.dim];
        if spec.plane.0 >= y.len() || spec.plane.1 >= y.len() {
            return Err(MultibumpError::Config(format!("rotation plane {:?} outside dimension {}", spec.plane, y.len())));
        }
        y[spec.plane.0] = rho0;
        let r = r_y(params.kappa, delta, mu, rho0)?;
        let plan = Self { profile, spec, y, r_y: r, eps: params.epsilon_cutoff, mu, kappa: params.kappa, delta_tau: delta };
        plan.validate()?;
        Ok(plan)
    }

    pub fn rho0(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn validate(&self) -> Result<(), MultibumpError> {
        let hi = eps_bound(self.kappa, self.delta_tau, self.mu);
        if !(self.eps > 0.0 && self.eps < hi) {
            return Err(MultibumpError::Epsilon { eps: self.eps, hi });
        }
        let bound = self.delta_tau * self.rho0();
        if !(self.r_y > 0.0 && self.r_y < bound) {
            return Err(MultibumpError::PlanRadius { r_y: self.r_y, bound });
        }
        let c = self.centers();
        for a in 0..c.len() {
            for b in a + 1..c.len() {
                let dist = dist(&c[a].0, &c[b].0);
                if dist <= 2.0 * self.r_y {
                    return Err(MultibumpError::Overlap { a, b, dist, two_r: 2.0 * self.r_y });
                }
            }
        }
        Ok(())
    }

    /// Orbit points `g_j y` with phases `τ(g_j)`.
    pub fn centers(&self) -> Vec<(Vec<f64>, Complex64)> {
        (0..self.spec.k)
            .map(|j| {
                let mut c = vec![0.0; self.y.len()];
                self.spec.rotate_point(j, &self.y, &mut c);
                (c, self.spec.tau(j))
            })
            .collect()
    }

    /// `(ω^{R_y})(r)`.
    pub fn bump(&self, r: f64) -> f64 {
        self.profile.eval(r) * chi(r / self.r_y, self.eps)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn sample_bumps(plan: &BumpPlan, grid: Grid, centers: &[(Vec<f64>, Complex64)]) -> Result<ComplexField, MultibumpError> {
    plan.validate()?;
    if grid.dim != plan.y.len() {
        return Err(MultibumpError::Config(format!("grid dim {} != profile dim {}", grid.dim, plan.y.len())));
    }
    let reach = centers.iter().flat_map(|(c, _)| c.iter().map(|v| v.abs())).fold(0.0, f64::max) + plan.r_y;
    let limit = grid.half_extent - 2.0 * grid.h();
    if reach > limit {
        return Err(MultibumpError::Padding { reach, limit });
    }
    Ok(ComplexField::from_fn(grid, |x| {
        centers
            .iter()
            .map(|(c, ph)| {
                let r = dist(x, c);
                if r < plan.r_y {
                    ph * plan.bump(r)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .sum()
    }))
}

/// `θ = Σ_j τ(g_j)·(ω^{R_y})_{g_j y}` sampled on the grid.
pub fn build_theta(plan: &BumpPlan, grid: Grid) -> Result<ComplexField, MultibumpError> {
    sample_bumps(plan, grid, &plan.centers())
}

/// The single translate `(ω^{R_y})_y`.
pub fn build_single(plan: &BumpPlan, grid: Grid) -> Result<ComplexField, MultibumpError> {
    sample_bumps(plan, grid, &[(plan.y.clone(), Complex64::new(1.0, 0.0))])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct H2Check {
    pub c0: f64,
    pub kappa: f64,
    pub rho: f64,
    pub nodes_checked: usize,
    /// Largest `|A|² + V − (V∞ − c₀e^{−κ|x|})` over checked nodes.
    pub worst_margin: f64,
    pub worst_node: Option<usize>,
}

/// Nodewise `(H2)` check on the context's sampled potentials for `|x| ≥ ϱ`.
pub fn h2_check(ctx: &EnergyContext) -> Result<H2Check, MultibumpError> {
    let (c0, kappa, rho) = (ctx.params.c0, ctx.params.kappa, ctx.params.rho);
    let grid = ctx.grid();
    let v_inf = ctx.pot.v_inf();
    let tol = 1e-12 * v_inf.abs().max(1.0);
    let (a, v) = (ctx.pot.a(), ctx.pot.v());
    let mut x = vec![0.0; grid.dim];
    let mut worst = (f64::NEG_INFINITY, None);
    let mut count = 0;
    for i in 0..grid.len() {
        grid.point(i, &mut x);
        let r = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        if r < rho {
            continue;
        }
        count += 1;
        let lhs = a.iter().map(|ax| ax[i] * ax[i]).sum::<f64>() + v[i];
        let rhs = v_inf - c0 * (-kappa * r).exp();
        if lhs - rhs > worst.0 {
            worst = (lhs - rhs, Some(i));
        }
        if lhs > rhs + tol {
            return Err(MultibumpError::H2 { node: i, radius: r, lhs, rhs });
        }
    }
    Ok(H2Check { c0, kappa, rho, nodes_checked: count, worst_margin: worst.0, worst_node: worst.1 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdCertificate {
    pub k: usize,
    pub m: usize,
    pub rho0: f64,
    #[serde(rename = "R_y")]
    pub r_y: f64,
    pub mu: f64,
    pub eps: f64,
    #[serde(rename = "E_Vinf")]
    pub e_vinf: f64,
    #[serde(rename = "k_E_Vinf")]
    pub k_e_vinf: f64,
    #[serde(rename = "max_t_J_theta")]
    pub max_t_j_theta: f64,
    #[serde(rename = "max_t_J_single")]
    pub max_t_j_single: f64,
    /// `k·E_{V∞} − max_t J(tθ)` with the full nonlocal term.
    pub gap: f64,
    /// `k·(E_{V∞} − max_t J(t·single))`, the per-bump split without interaction.
    pub split_gap: f64,
    /// `D(θ) − k·D(single)`.
    pub cross_term: f64,
    pub d0_fit: Option<f64>,
    pub kappa_fit: Option<f64>,
    pub h2: H2Check,
    pub certified: bool,
    pub refusal: Option<String>,
}

/// Spherical average of `f(|d·ê + r·e|)` for `e` on the unit sphere (`dim ∈ {2, 3}`).
fn shell_average(dim: usize, r: f64, d: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    if r == 0.0 {
        return f(d);
    }
    if dim == 3 {
        // (1/(2rd))∫_{|d−r|}^{d+r} f(s) s ds
        let rule = gauss_legendre(24, (d - r).abs(), d + r);
        rule.iter().map(|(s, w)| w * f(*s) * s).sum::<f64>() / (2.0 * r * d)
    } else {
        let rule = gauss_legendre(32, 0.0, std::f64::consts::PI);
        rule.iter().map(|(t, w)| w * f((r * r + d * d + 2.0 * r * d * t.cos()).max(0.0).sqrt())).sum::<f64>() / std::f64::consts::PI
    }
}

/// `∫∫ f(|x|) f(|x'|) |x − x' − d ê|^{−α}` for the cut density `f` on the mesh.
fn cross_pair(prob: &RadialProblem, f: &[f64], d: f64, newton: bool) -> f64 {
    if newton {
        let mass: f64 = f.iter().zip(&prob.weights).map(|(a, w)| a * w).sum();
        return mass * mass / d;
    }
    let pot = |s: f64| prob.kernel.potential_at(f, s);
    f.iter()
        .zip(&prob.weights)
        .enumerate()
        .filter(|(_, (a, _))| **a != 0.0)
        .map(|(i, (a, w))| a * w * shell_average(prob.mesh.dim, prob.mesh.r(i), d, &pot))
        .sum()
}

/// `max_t J(tθ)` against `k·E_{V∞}` for the plan's orbit, with the nodewise `(H2)` check on `ctx`.
pub fn threshold_certificate(plan: &BumpPlan, ctx: &EnergyContext) -> Result<ThresholdCertificate, MultibumpError> {
    plan.validate()?;
    let prof = &plan.profile;
    let dim = prof.mesh.dim;
    if dim != 2 && dim != 3 {
        return Err(MultibumpError::Config(format!("certificate supports N in {{2, 3}}, got {dim}")));
    }
    let v_inf = ctx.pot.v_inf();
    if (prof.lambda - v_inf).abs() > 1e-12 * v_inf {
        return Err(MultibumpError::Config(format!("profile lambda {} differs from V_inf {v_inf}", prof.lambda)));
    }
    if prof.p != ctx.p() || prof.alpha != ctx.params.alpha || dim != ctx.params.dim {
        return Err(MultibumpError::Config("profile (N, alpha, p) differ from the context".into()));
    }
    let Some((vector, scalar)) = ctx.pot.source() else {
        return Err(MultibumpError::Config("certificate needs preset potentials".into()));
    };
    let h2 = h2_check(ctx)?;
    let prob = RadialProblem::new(prof.mesh, prof.alpha, prof.p, v_inf)?;
    let p = prof.p;
    let u = &prof.values;
    let cut = cut_values(prof, plan.r_y, plan.eps);
    let base = prob.energies(u);
    let e = crate::energy::mp_closed_form(base.norm2, base.d, p);
    let del = cut_deltas(&prob, u, &cut);

    // ∫ (|A|² + V − V∞)(x + y) (ω^R)²(x) dx, directions taken in the frame whose pole is ŷ
    let rho0 = plan.rho0();
    let yhat: Vec<f64> = plan.y.iter().map(|v| v / rho0).collect();
    let axis = plan.spec.plane.0;
    let others: Vec<usize> = (0..dim).filter(|&a| a != axis).collect();
    let rule = SphereRule::new(dim, 48, 16);
    let mut z = vec![0.0; dim];
    let mut av = vec![0.0; dim];
    let mut excess = |pt: &[f64]| -> f64 {
        vector.eval(pt, &mut av);
        av.iter().map(|t| t * t).sum::<f64>() + scalar.eval(pt) - v_inf
    };
    let mut gain = 0.0;
    for (i, c) in cut.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let r = prob.mesh.r(i);
        let mut s = 0.0;
        for (dir, w) in rule.directions() {
            // pole component of the rule is its last active axis
            let pole = if dim == 3 { dir[2] } else { dir[1] };
            for a in 0..dim {
                z[a] = plan.y[a] + r * yhat[a] * pole;
            }
            for (slot, &a) in others.iter().enumerate() {
                z[a] += r * dir[slot];
            }
            s += w * excess(&z);
        }
        gain += prob.weights[i] * c * c * s;
    }
    let d_norm = del.kinetic + v_inf * del.mass + gain;
    let d_single = -del.d;

    let fcut = prob.density(&cut);
    let newton = dim == 3 && prof.alpha == 1.0;
    let centers = plan.centers();
    let cross_term: f64 = (1..centers.len()).map(|j| cross_pair(&prob, &fcut, dist(&centers[0].0, &centers[j].0), newton)).sum::<f64>() * centers.len() as f64;

    let k = plan.spec.k as f64;
    let q = p / (p - 1.0);
    let ln_n = (d_norm / base.norm2).ln_1p();
    let split_drop = -e * (q * (ln_n - (d_single / base.d).ln_1p() / p)).exp_m1();
    let theta_drop = -e * (q * (ln_n - ((d_single + cross_term / k) / base.d).ln_1p() / p)).exp_m1();
    let split_gap = k * split_drop;
    let gap = k * theta_drop;
    let refusal = if !(h2.c0 > 0.0) {
        Some("c0 = 0: (H2) needs a strict well, nothing certifies the gap".to_string())
    } else if !(split_gap > 0.0) {
        Some(format!("split gap {split_gap:e} is not positive at rho0 = {rho0}"))
    } else if !(gap > 0.0) {
        Some(format!("gap {gap:e} is not positive at rho0 = {rho0}"))
    } else {
        None
    };
    Ok(ThresholdCertificate {
        k: plan.spec.k,
        m: plan.spec.m,
        rho0,
        r_y: plan.r_y,
        mu: plan.mu,
        eps: plan.eps,
        e_vinf: e,
        k_e_vinf: k * e,
        max_t_j_theta: k * e - gap,
        max_t_j_single: e - split_drop,
        gap,
        split_gap,
        cross_term,
        d0_fit: None,
        kappa_fit: None,
        h2,
        certified: refusal.is_none(),
        refusal,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdSweep {
    pub rows: Vec<ThresholdCertificate>,
    /// `split_gap ≈ k·d₀·e^{−κ_fit·ϱ₀}`; `None` unless every split gap is positive.
    pub d0_fit: Option<f64>,
    pub kappa_fit: Option<f64>,
}

/// Certificates over `ϱ₀ ∈ rho_list` with a log-linear fit of the split gap.
pub fn threshold_sweep(
    profile: &RadialProfile,
    spec: SymmetrySpec,
    params: &ProblemParams,
    ctx: &EnergyContext,
    rho_list: &[f64],
) -> Result<ThresholdSweep, MultibumpError> {
    let mut rows = Vec::with_capacity(rho_list.len());
    for &rho0 in rho_list {
        let plan = BumpPlan::new(profile.clone(), spec, params, rho0)?;
        rows.push(threshold_certificate(&plan, ctx)?);
    }
    let fit = if rows.len() >= 2 && rows.iter().all(|r| r.split_gap > 0.0) {
        let x: Vec<f64> = rows.iter().map(|r| r.rho0).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.split_gap).collect();
        log_linear_rate(&x, &y).map(|(rate, c, _)| (c.exp() / spec.k as f64, rate))
    } else {
        None
    };
    for r in &mut rows {
        r.d0_fit = fit.map(|f| f.0);
        r.kappa_fit = fit.map(|f| f.1);
    }
    Ok(ThresholdSweep { rows, d0_fit: fit.map(|f| f.0), kappa_fit: fit.map(|f| f.1) })
}
