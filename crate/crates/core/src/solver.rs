//! Equivariant Nehari descent for `J_{A,V}` on the grid.
//!
//! One iteration is `u ← symmetrize(nehari(u + s·d))` where `g` is the `(−Δ + σ)`-preconditioned
//! gradient and `d` is either `−g` (Barzilai-Borwein first trial) or an L-BFGS direction built in
//! the `σ` inner product. Steps are Armijo-backtracked on `max_t J(t·)`.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{mp_closed_form, nehari_t, EnergyContext, EnergyError};
use crate::field::{random_smooth, ComplexField, Grid};
use crate::fit::log_linear_rate;
use crate::params::{validate, Violation};
use crate::symmetry::{compat_check, equivariance_defect, symmetrize, winding_number, CompatReport, SymmetryError, SymmetrySpec};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("config: {0}")]
    Config(String),
    #[error("parameters not admissible: {}", .0.iter().map(|v| v.message.as_str()).collect::<Vec<_>>().join("; "))]
    Inadmissible(Vec<Violation>),
    #[error("potentials incompatible with the symmetry: worst element {}, V violation {:e}, A violation {:e}", .0.worst_element, .0.max_v_violation, .0.max_a_violation)]
    Incompatible(Box<CompatReport>),
    #[error("degenerate initial guess: {0}")]
    DegenerateGuess(String),
    #[error("non-finite values at iteration {iter}")]
    NonFinite { iter: usize, last_good: Box<ComplexField> },
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialGuess {
    /// `k` Gaussians at radius `radius` on the first plane axis and its rotations, phases `τ(g_j)`.
    RingBumps {
        radius: f64,
        width: f64,
        amplitude: f64,
    },
    SingleBump {
        width: f64,
        amplitude: f64,
    },
    RandomSmooth {
        bumps: usize,
        spread: f64,
    },
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Direction {
    Gradient,
    Lbfgs { memory: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub direction: Direction,
    pub max_iter: usize,
    pub step_init: f64,
    pub step_min: f64,
    pub step_max: f64,
    pub armijo_c: f64,
    pub tol_grad: f64,
    pub tol_nehari: f64,
    pub seed: u64,
    pub initial: InitialGuess,
    pub symmetrize_every: usize,
    /// Circle radius for the winding number of the result.
    pub winding_radius: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            direction: Direction::Lbfgs { memory: 8 },
            max_iter: 500,
            step_init: 1.0,
            step_min: 1e-8,
            step_max: 16.0,
            armijo_c: 1e-4,
            tol_grad: 1e-9,
            tol_nehari: 1e-10,
            seed: 0,
            initial: InitialGuess::SingleBump { width: 1.0, amplitude: 1.0 },
            symmetrize_every: 1,
            winding_radius: None,
        }
    }
}

impl SolveConfig {
    pub fn check(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::Config(m.into()));
        if !(self.tol_grad > 0.0 && self.tol_nehari > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.step_min > 0.0 && self.step_min <= self.step_init && self.step_init <= self.step_max) {
            return bad("step bounds must satisfy 0 < step_min <= step_init <= step_max");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if self.symmetrize_every == 0 {
            return bad("symmetrize_every must be >= 1");
        }
        if self.direction == (Direction::Lbfgs { memory: 0 }) {
            return bad("lbfgs memory must be >= 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub j: f64,
    pub grad_res: f64,
    pub nehari_res: f64,
    pub equivariance_defect: f64,
    pub step: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub field: ComplexField,
    pub energy: f64,
    pub norm2: f64,
    pub d: f64,
    /// `|t_u − 1|`.
    pub t_drift: f64,
    pub grad_residual: f64,
    pub nehari_residual: f64,
    pub strong_residual: f64,
    pub equivariance_defect: f64,
    pub winding_number: Option<i64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    pub wall_clock_s: f64,
    pub config: SolveConfig,
    pub symmetry: SymmetrySpec,
}

impl SolveReport {
    /// Recomputes every residual from `self.field`.
    pub fn recompute(&mut self, ctx: &EnergyContext) -> Result<(), SolveError> {
        let e = ctx.evaluate(&self.field)?;
        let r = ctx.residuals(&self.field)?;
        self.energy = e.j;
        self.norm2 = e.norm2;
        self.d = e.d;
        self.t_drift = if e.d > 0.0 { (nehari_t(e.norm2, e.d, ctx.p()) - 1.0).abs() } else { f64::NAN };
        self.grad_residual = r.grad_sigma;
        self.nehari_residual = r.nehari;
        self.strong_residual = r.strong_l2;
        self.equivariance_defect = equivariance_defect(&self.field, &self.symmetry)?;
        self.winding_number = match self.config.winding_radius {
            Some(rad) => winding_number(&self.field, rad, &self.symmetry).ok(),
            None => None,
        };
        Ok(())
    }

    /// `iter,J,grad_res,nehari_res,equivariance_defect,step` with 17 significant digits.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iter,J,grad_res,nehari_res,equivariance_defect,step\n");
        for t in &self.trace {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.iter,
                crate::fmt17(t.j),
                crate::fmt17(t.grad_res),
                crate::fmt17(t.nehari_res),
                crate::fmt17(t.equivariance_defect),
                crate::fmt17(t.step)
            ));
        }
        s
    }
}

/// Samples the configured initial guess (before symmetrization and Nehari scaling).
pub fn initial_guess(grid: Grid, spec: &SymmetrySpec, guess: &InitialGuess, seed: u64) -> ComplexField {
    match *guess {
        InitialGuess::Zero => ComplexField::zeros(grid),
        InitialGuess::SingleBump { width, amplitude } => {
            ComplexField::from_real(grid, |x| amplitude * (-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * width * width)).exp())
        }
        InitialGuess::RingBumps { radius, width, amplitude } => {
            let mut y = vec![0.0; grid.dim];
            y[spec.plane.0] = radius;
            let centers: Vec<(Vec<f64>, Complex64)> = (0..spec.k)
                .map(|j| {
                    let mut c = vec![0.0; grid.dim];
                    spec.rotate_point(j, &y, &mut c);
                    (c, spec.tau(j))
                })
                .collect();
            ComplexField::from_fn(grid, |x| {
                centers
                    .iter()
                    .map(|(c, ph)| {
                        let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                        ph * (amplitude * (-d2 / (2.0 * width * width)).exp())
                    })
                    .sum()
            })
        }
        InitialGuess::RandomSmooth { bumps, spread } => random_smooth(grid, seed, bumps, spread),
    }
}

/// Returns `(t·u, norm2, d)` with `t = t_u`, or `None` when `u` or `D(u)` vanishes.
fn nehari_project(ctx: &EnergyContext, u: &ComplexField) -> Result<Option<(ComplexField, f64, f64)>, SolveError> {
    let e = ctx.evaluate(u)?;
    if !(e.norm2 > 0.0 && e.d > 0.0) || !e.norm2.is_finite() || !e.d.is_finite() {
        return Ok(None);
    }
    let t = nehari_t(e.norm2, e.d, ctx.p());
    let p = ctx.p();
    Ok(Some((u.scaled(t), t * t * e.norm2, t.powf(2.0 * p) * e.d)))
}

pub fn solve(ctx: &EnergyContext, spec: &SymmetrySpec, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    cfg.check()?;
    spec.check()?;
    let report = validate(&ctx.params, Some(spec));
    if !report.admissible {
        return Err(SolveError::Inadmissible(report.violations));
    }
    let compat = compat_check(&ctx.pot, spec)?;
    if !compat.compatible {
        return Err(SolveError::Incompatible(Box::new(compat)));
    }
    let grid = ctx.grid();
    let p = ctx.p();
    let dv = grid.cell_volume();

    let guess = initial_guess(grid, spec, &cfg.initial, cfg.seed);
    if guess.max_abs() == 0.0 {
        return Err(SolveError::DegenerateGuess("u = 0, the Nehari scaling is undefined".into()));
    }
    let guess = symmetrize(&guess, spec)?;
    let (mut u, _, _) = nehari_project(ctx, &guess)?.ok_or_else(|| SolveError::DegenerateGuess("symmetrized guess has vanishing norm or D(u) = 0".into()))?;

    let mut trace = Vec::new();
    let mut step = cfg.step_init;
    let mut prev: Option<(ComplexField, ComplexField, Vec<Complex64>)> = None;
    let mut pairs: Vec<Pair> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..=cfg.max_iter {
        iterations = iter;
        let (e, r) = ctx.evaluate_with_residual(&u)?;
        if !(e.j.is_finite() && r.iter().all(|z| z.re.is_finite() && z.im.is_finite())) {
            return Err(SolveError::NonFinite { iter, last_good: Box::new(u) });
        }
        let g = ctx.precondition(&r);
        let gg: f64 = r.iter().zip(&g.values).map(|(a, b)| (a * b.conj()).re).sum::<f64>() * dv;
        let grad_res = (gg.max(0.0) / ctx.sigma_inner(&u, &u)).sqrt();
        let nehari_res = (e.norm2 - e.d).abs() / e.norm2;
        let jval = mp_closed_form(e.norm2, e.d, p);
        trace.push(TraceRow { iter, j: e.j, grad_res, nehari_res, equivariance_defect: equivariance_defect(&u, spec)?, step });
        if grad_res <= cfg.tol_grad && nehari_res <= cfg.tol_nehari {
            converged = true;
            break;
        }
        if iter == cfg.max_iter {
            break;
        }
        if let Some((pu, pg, pr)) = &prev {
            let su = u.axpy(-1.0, pu);
            let yg = g.axpy(-1.0, pg);
            // M g = r, so M y needs no extra transform
            let my: Vec<Complex64> = r.iter().zip(pr).map(|(a, b)| a - b).collect();
            let ms = ctx.apply_shifted(&su);
            let ss = rdot(&su.values, &ms.values) * dv;
            let sy = rdot(&su.values, &my) * dv;
            if sy > 0.0 && ss > 0.0 {
                step = (ss / sy).clamp(cfg.step_min, cfg.step_max);
                if let Direction::Lbfgs { memory } = cfg.direction {
                    if pairs.len() == memory {
                        pairs.remove(0);
                    }
                    pairs.push(Pair { s: su, y: yg, ms: ms.values, my, rho: 1.0 / sy });
                }
            }
        }
        let (dir, first) = match cfg.direction {
            Direction::Gradient => (g.scaled(-1.0), step),
            Direction::Lbfgs { .. } => match lbfgs_direction(&g, &r, &pairs, dv) {
                Some(d) => (d, 1.0),
                None => {
                    pairs.clear();
                    (g.scaled(-1.0), step)
                }
            },
        };
        // slope J′(u)d = ⟨g, d⟩_σ
        let slope = rdot(&r, &dir.values) * dv;
        // ‖u + s d‖² is quadratic in s; only D changes per trial
        let ud = ctx.inner(&u, &dir)?;
        let d2 = ctx.norm2(&dir)?;
        let mut s = first;
        let accepted = loop {
            let v = u.axpy(s, &dir);
            let n2 = e.norm2 + 2.0 * s * ud + s * s * d2;
            let dv_ = ctx.d(&v)?;
            if n2 > 0.0 && dv_ > 0.0 {
                let jv = mp_closed_form(n2, dv_, p);
                if jv <= jval + cfg.armijo_c * s * slope + 1e-14 * jval.abs() {
                    break Some((v, s));
                }
            }
            if s <= cfg.step_min {
                break None;
            }
            s = (0.5 * s).max(cfg.step_min);
        };
        let Some((v, s)) = accepted else { break };
        let v = if (iter + 1) % cfg.symmetrize_every == 0 { symmetrize(&v, spec)? } else { v };
        let Some((next, _, _)) = nehari_project(ctx, &v)? else {
            return Err(SolveError::NonFinite { iter, last_good: Box::new(u) });
        };
        if next.check_finite().is_err() {
            return Err(SolveError::NonFinite { iter, last_good: Box::new(u) });
        }
        prev = Some((u, g, r));
        u = next;
        step = s;
    }
    let mut rep = SolveReport {
        field: u,
        energy: 0.0,
        norm2: 0.0,
        d: 0.0,
        t_drift: 0.0,
        grad_residual: 0.0,
        nehari_residual: 0.0,
        strong_residual: 0.0,
        equivariance_defect: 0.0,
        winding_number: None,
        iterations,
        converged,
        trace,
        wall_clock_s: 0.0,
        config: cfg.clone(),
        symmetry: *spec,
    };
    rep.recompute(ctx)?;
    rep.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

fn rdot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum()
}

/// Curvature pair with cached `M s`, `M y` for `M = −Δ̃ + σ`.
struct Pair {
    s: ComplexField,
    y: ComplexField,
    ms: Vec<Complex64>,
    my: Vec<Complex64>,
    rho: f64,
}

/// Two-loop recursion in the `σ` inner product; `None` if the result is not a descent direction.
fn lbfgs_direction(g: &ComplexField, r: &[Complex64], pairs: &[Pair], dv: f64) -> Option<ComplexField> {
    let last = pairs.last()?;
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(pairs.len());
    for pr in pairs.iter().rev() {
        let a = pr.rho * rdot(&pr.ms, &q.values) * dv;
        q = q.axpy(-a, &pr.y);
        alphas.push(a);
    }
    let gamma = rdot(&last.s.values, &last.my) / rdot(&last.y.values, &last.my);
    let mut d = q.scaled(gamma);
    for (pr, a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = pr.rho * rdot(&pr.my, &d.values) * dv;
        d = d.axpy(a - b, &pr.s);
    }
    let d = d.scaled(-1.0);
    (rdot(r, &d.values) < 0.0).then_some(d)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsSummary {
    pub is_ps_like: bool,
    pub c_estimate: f64,
    /// Fitted `−d log(grad_res)/d iter` over the second half of the trace; `None` below 10 rows.
    pub residual_slope: Option<f64>,
    /// Fraction of `Σ|u|²` on nodes with some `|x_a| ≥ 0.9·L`.
    pub boundary_mass_fraction: f64,
    pub stagnated: bool,
    pub notes: Vec<String>,
}

pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

/// Palais-Smale style evidence from a finished run; never fails.
pub fn ps_monitor(report: &SolveReport) -> PsSummary {
    let mut notes = Vec::new();
    let residual_slope = if report.trace.len() >= 10 {
        let half = &report.trace[report.trace.len() / 2..];
        let x: Vec<f64> = half.iter().map(|t| t.iter as f64).collect();
        let y: Vec<f64> = half.iter().map(|t| t.grad_res).collect();
        log_linear_rate(&x, &y).map(|(rate, _, _)| rate)
    } else {
        notes.push(format!("only {} iterations recorded; slope not fitted", report.trace.len()));
        None
    };
    let g = report.field.grid;
    let edge = 0.9 * g.half_extent;
    let mut x = vec![0.0; g.dim];
    let (mut total, mut outer) = (0.0, 0.0);
    for (i, z) in report.field.values.iter().enumerate() {
        g.point(i, &mut x);
        let m = z.norm_sqr();
        total += m;
        if x.iter().any(|c| c.abs() >= edge) {
            outer += m;
        }
    }
    let boundary_mass_fraction = if total > 0.0 { outer / total } else { 0.0 };
    let monotone = report.trace.windows(2).all(|w| w[1].j <= w[0].j + 1e-12 * w[0].j.abs().max(1.0));
    if !monotone {
        notes.push("energy increased between accepted iterates".into());
    }
    if boundary_mass_fraction > BOUNDARY_MASS_LIMIT {
        notes.push(format!("boundary mass fraction {boundary_mass_fraction:e} exceeds {BOUNDARY_MASS_LIMIT:e}; box too small"));
    }
    let decaying = residual_slope.map(|s| s > 1e-3).unwrap_or(false);
    let stagnated = boundary_mass_fraction > BOUNDARY_MASS_LIMIT || (!report.converged && !decaying);
    if stagnated && !report.converged {
        notes.push("residual stagnated before tolerance".into());
    }
    PsSummary {
        is_ps_like: (report.converged || decaying) && report.energy.is_finite() && boundary_mass_fraction <= BOUNDARY_MASS_LIMIT,
        c_estimate: report.energy,
        residual_slope,
        boundary_mass_fraction,
        stagnated,
        notes,
    }
}
