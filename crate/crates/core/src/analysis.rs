//! Numeric verification: decay windows, derivative checks and cross-module consistency.
//!
//! Every check yields a [`CheckResult`]; suites return their results sorted by name so that
//! reports are byte-stable across runs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::energy::{EnergyContext, EnergyError};
use crate::field::{random_smooth, ComplexField, FieldError, Grid};
use crate::fit::least_squares;
use crate::nonlocal::{abs_pow, d_value, NonlocalError, RieszKernel};
use crate::params::ProblemParams;
use crate::radial::{decay_fit_values, radial_convolve, ProfileSource, RadialError, RadialProfile};
use crate::symmetry::{equivariance_defect, SymmetryError, SymmetrySpec};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("profile is not a converged ground state")]
    Unconverged,
    #[error("window outside reliable tail: r_max = {r_max} < 6/sqrt(lambda) = {need}")]
    ShortTail { r_max: f64, need: f64 },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Nonlocal(#[from] NonlocalError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

/// One named measurement against closed windows `[lo, hi]`, one window per measured value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: Vec<f64>,
    pub windows: Vec<(f64, f64)>,
    pub pass: bool,
    /// SHA-256 of the canonical description of the inputs.
    pub context_hash: String,
    pub note: String,
}

impl CheckResult {
    /// Panics on an empty or inverted window; those are programming errors.
    pub fn new(name: &str, measured: Vec<f64>, windows: Vec<(f64, f64)>, context: &str, note: &str) -> Self {
        assert_eq!(measured.len(), windows.len(), "{name}: one window per value");
        assert!(windows.iter().all(|(lo, hi)| lo <= hi), "{name}: empty window");
        let pass = measured.iter().zip(&windows).all(|(m, (lo, hi))| *lo <= *m && *m <= *hi);
        Self { name: name.to_string(), measured, windows, pass, context_hash: hex_sha256(&format!("{name}|{context}")), note: note.to_string() }
    }

    pub fn single(name: &str, measured: f64, lo: f64, hi: f64, context: &str, note: &str) -> Self {
        Self::new(name, vec![measured], vec![(lo, hi)], context, note)
    }
}

fn hex_sha256(s: &str) -> String {
    Sha256::digest(s.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn join(xs: impl Iterator<Item = f64>) -> String {
    xs.map(crate::fmt17).collect::<Vec<_>>().join(";")
}

/// `name,measured,lo,hi,pass`; multi-valued checks join their entries with `;`.
pub fn checks_csv(results: &[CheckResult]) -> String {
    let mut s = String::from("name,measured,lo,hi,pass\n");
    for c in results {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            c.name,
            join(c.measured.iter().copied()),
            join(c.windows.iter().map(|w| w.0)),
            join(c.windows.iter().map(|w| w.1)),
            c.pass
        ));
    }
    s
}

pub fn checks_json(results: &[CheckResult]) -> serde_json::Value {
    serde_json::to_value(results).expect("check results serialize")
}

fn sorted(mut v: Vec<CheckResult>) -> Vec<CheckResult> {
    v.sort_by(|a, b| a.name.cmp(&b.name));
    v
}

fn profile_context(profile: &RadialProfile) -> String {
    format!(
        "N={} r_max={} m={} lambda={} alpha={} p={} energy={}",
        profile.mesh.dim,
        crate::fmt17(profile.mesh.r_max),
        profile.mesh.m,
        crate::fmt17(profile.lambda),
        crate::fmt17(profile.alpha),
        crate::fmt17(profile.p),
        crate::fmt17(profile.energy)
    )
}

fn require_converged(profile: &RadialProfile) -> Result<(), AnalysisError> {
    if profile.source == ProfileSource::GroundState && !profile.converged {
        return Err(AnalysisError::Unconverged);
    }
    Ok(())
}

fn check_exponents(params: &ProblemParams, profile: &RadialProfile) -> Result<(), AnalysisError> {
    if params.dim != profile.mesh.dim || params.alpha != profile.alpha || params.p != profile.p {
        return Err(AnalysisError::Config(format!(
            "params (N={}, alpha={}, p={}) do not match the profile (N={}, alpha={}, p={})",
            params.dim, params.alpha, params.p, profile.mesh.dim, profile.alpha, profile.p
        )));
    }
    Ok(())
}

/// Fit window used by the decay suite.
pub fn decay_window(r_max: f64) -> (f64, f64) {
    (0.4 * r_max, 0.9 * r_max)
}

/// Rate window `[lo, hi]` in units of the rate itself.
pub fn decay_rate_window(p: f64, lambda: f64) -> (f64, f64) {
    let s = lambda.sqrt();
    if p > 2.0 {
        (0.98 * s, 1.05 * s)
    } else {
        ((0.9 * lambda).sqrt(), 1.05 * s)
    }
}

/// Rate and power fits of `u` and `|u′|` on the tail window.
pub fn appendix_decay_suite(params: &ProblemParams, profile: &RadialProfile) -> Result<Vec<CheckResult>, AnalysisError> {
    require_converged(profile)?;
    check_exponents(params, profile)?;
    if params.p < 2.0 {
        return Err(AnalysisError::Config(format!("decay windows need p >= 2, got {}", params.p)));
    }
    let lambda = profile.lambda;
    let need = 6.0 / lambda.sqrt();
    if profile.r_max() < need {
        return Err(AnalysisError::ShortTail { r_max: profile.r_max(), need });
    }
    let window = decay_window(profile.r_max());
    let du: Vec<f64> = profile.derivative().iter().map(|v| v.abs()).collect();
    let fu = decay_fit_values(&profile.mesh, &profile.values, window)?;
    let fd = decay_fit_values(&profile.mesh, &du, window)?;
    let (lo, hi) = decay_rate_window(params.p, lambda);
    let beta = (profile.mesh.dim as f64 - 1.0) / 2.0;
    let ctx = format!("{} window=({}, {})", profile_context(profile), crate::fmt17(window.0), crate::fmt17(window.1));
    let note = if params.p > 2.0 {
        String::new()
    } else {
        "p = 2: rate window [sqrt(0.9 lambda), 1.05 sqrt(lambda)] is a pragmatic rendering of the epsilon-family bound".to_string()
    };
    Ok(sorted(vec![
        CheckResult::single("decay.u.rate", fu.rate, lo, hi, &ctx, &note),
        CheckResult::single("decay.u.power", fu.power, beta - 0.3, beta + 0.3, &ctx, ""),
        CheckResult::single("decay.du.rate", fd.rate, lo, hi, &ctx, &note),
        CheckResult::single("decay.du.power", fd.power, beta - 0.3, beta + 0.3, &ctx, ""),
    ]))
}

/// `K ∗ u^p` on the profile mesh with tail diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvolutionTail {
    pub values: Vec<f64>,
    /// `(K∗u^p)(0.9 r_max)/(K∗u^p)(0)`; zero when `u = 0`.
    pub ratio: f64,
    /// Increases over the last quarter of the mesh.
    pub monotone_violations: usize,
    /// `β` in `(K∗u^p)(r) ≈ c·r^{−β}` fitted on `[0.5, 0.9]·r_max`; `None` when `u = 0`.
    pub tail_power: Option<f64>,
}

pub fn convolution_tail(profile: &RadialProfile) -> Result<ConvolutionTail, AnalysisError> {
    let mesh = profile.mesh;
    let f: Vec<f64> = profile.values.iter().map(|v| v.abs().powf(profile.p)).collect();
    let values = radial_convolve(mesh, &f, profile.alpha)?;
    let m = mesh.m;
    let i90 = ((0.9 * mesh.r_max / mesh.h()).round() as usize).min(m - 1);
    let ratio = if values[0] > 0.0 { values[i90] / values[0] } else { 0.0 };
    let monotone_violations = values[3 * m / 4..].windows(2).filter(|w| w[1] > w[0]).count();
    let tail_power = if values[0] > 0.0 {
        let (mut cols, mut y) = (vec![Vec::new(), Vec::new()], Vec::new());
        for (i, v) in values.iter().enumerate() {
            let r = mesh.r(i);
            if r >= 0.5 * mesh.r_max && r <= 0.9 * mesh.r_max && *v > 0.0 {
                cols[0].push(1.0);
                cols[1].push(-r.ln());
                y.push(v.ln());
            }
        }
        least_squares(&cols, &y).map(|(b, _)| b[1])
    } else {
        None
    };
    Ok(ConvolutionTail { values, ratio, monotone_violations, tail_power })
}

/// `(K∗u^p)(0.9 r_max) ≤ 0.01·(K∗u^p)(0)`, monotone last quarter, tail power within 20% of `α`.
pub fn kkstar_decay_of_convolution(profile: &RadialProfile, params: &ProblemParams) -> Result<CheckResult, AnalysisError> {
    require_converged(profile)?;
    check_exponents(params, profile)?;
    let tail = convolution_tail(profile)?;
    let ctx = profile_context(profile);
    let mut measured = vec![tail.ratio, tail.monotone_violations as f64];
    let mut windows = vec![(0.0, 0.01), (0.0, 0.0)];
    let mut note = String::new();
    match tail.tail_power {
        Some(b) => {
            measured.push(b / params.alpha);
            windows.push((0.8, 1.2));
        }
        None => note.push_str("u = 0: convolution vanishes identically"),
    }
    Ok(CheckResult::new("convolution.tail", measured, windows, &ctx, &note))
}

/// `Σ_x Σ_y K(x − y)|u(x)|^p|u(y)|^p h^{2d}` by the direct double sum.
pub fn brute_force_d(u: &ComplexField, p: f64, kernel: &RieszKernel) -> Result<f64, AnalysisError> {
    let g = u.grid;
    if g != kernel.grid() {
        return Err(FieldError::GridMismatch(g, kernel.grid()).into());
    }
    let (n, dim) = (g.n, g.dim);
    let f = abs_pow(u, p);
    // kernel table indexed by the flat offset (mod n per axis)
    let mut table = vec![0.0; g.len()];
    let mut off = vec![0i64; dim];
    for (k, t) in table.iter_mut().enumerate() {
        for (a, o) in off.iter_mut().enumerate() {
            *o = g.axis_index(k, a) as i64;
        }
        *t = kernel.value(&off);
    }
    let idx: Vec<Vec<usize>> = (0..g.len()).map(|i| (0..dim).map(|a| g.axis_index(i, a)).collect()).collect();
    let mut total = 0.0;
    for (i, fi) in f.iter().enumerate() {
        if *fi == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for (j, fj) in f.iter().enumerate() {
            let k = (0..dim).fold(0, |acc, a| acc * n + (idx[i][a] + n - idx[j][a]) % n);
            row += table[k] * fj;
        }
        total += fi * row;
    }
    Ok(total * g.cell_volume() * g.cell_volume())
}

/// FFT `D` against [`brute_force_d`] on a seeded random field.
pub fn d_oracle_check(grid: Grid, p: f64, kernel: &RieszKernel, seed: u64) -> Result<CheckResult, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = ComplexField { grid, values: (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect() };
    let fast = d_value(&u, p, kernel)?;
    let slow = brute_force_d(&u, p, kernel)?;
    let ctx = format!("grid={grid:?} p={} alpha={} seed={seed}", crate::fmt17(p), crate::fmt17(kernel.alpha()));
    Ok(CheckResult::single("d.fft_vs_brute_force", ((fast - slow) / slow).abs(), 0.0, 1e-10, &ctx, ""))
}

/// `J′(u)v` against the central difference `(J(u + hv) − J(u − hv))/2h`, worst relative error.
pub fn gradient_fd_check(ctx: &EnergyContext, pairs: usize, seed: u64) -> Result<CheckResult, AnalysisError> {
    let grid = ctx.grid();
    let spread = 0.4 * grid.half_extent;
    let mut worst: f64 = 0.0;
    for k in 0..pairs as u64 {
        let u = random_smooth(grid, seed.wrapping_add(2 * k), 3, spread);
        let v = random_smooth(grid, seed.wrapping_add(2 * k + 1), 3, spread);
        let h = 1e-4 * u.l2_norm() / v.l2_norm();
        let an = ctx.derivative(&u, &v)?;
        let fd = (ctx.j(&u.axpy(h, &v))? - ctx.j(&u.axpy(-h, &v))?) / (2.0 * h);
        worst = worst.max(((an - fd) / an).abs());
    }
    let c = format!("grid={grid:?} pairs={pairs} seed={seed}");
    Ok(CheckResult::single("gradient.vs_finite_difference", worst, 0.0, 1e-6, &c, ""))
}

/// Seeded lattice-periodic phase `φ = Σ c cos(π j·x/L + θ)` with `|j_a| ≤ 2`, and its exact gradient.
pub fn random_phase(grid: Grid, seed: u64, modes: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(Vec<f64>, f64, f64)> = (0..modes)
        .map(|_| {
            let j: Vec<f64> = (0..grid.dim).map(|_| rng.gen_range(-2i32..=2) as f64 * PI / grid.half_extent).collect();
            (j, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let mut phi = vec![0.0; grid.len()];
    let mut grad = vec![vec![0.0; grid.len()]; grid.dim];
    let mut x = vec![0.0; grid.dim];
    for i in 0..grid.len() {
        grid.point(i, &mut x);
        for (j, c, th) in &terms {
            let arg = j.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + th;
            phi[i] += c * arg.cos();
            for a in 0..grid.dim {
                grad[a][i] -= c * j[a] * arg.sin();
            }
        }
    }
    (phi, grad)
}

/// Invariance of `J`, `‖u‖²`, `D`, the Nehari residual and the strong residual under
/// `(u, A) ↦ (e^{−iφ}u, A + ∇φ)`, the gauge pair of `∇_A = ∇ + iA`. Worst relative change.
pub fn gauge_check(ctx: &EnergyContext, u: &ComplexField, phases: usize, seed: u64) -> Result<CheckResult, AnalysisError> {
    let grid = ctx.grid();
    let e0 = ctx.evaluate(u)?;
    let r0 = ctx.residuals(u)?;
    let (mut worst, mut worst_sigma): (f64, f64) = (0.0, 0.0);
    for k in 0..phases as u64 {
        let (phi, grad) = random_phase(grid, seed.wrapping_add(k), 4);
        let pot = ctx.pot.gauge_shifted(&grad)?;
        let kernel = RieszKernel::new(grid, ctx.kernel.alpha(), ctx.kernel.rule())?;
        let shifted = EnergyContext::new(ctx.params.clone(), pot, kernel)?;
        let w = ComplexField { grid, values: u.values.iter().zip(&phi).map(|(z, f)| z * Complex64::from_polar(1.0, -f)).collect() };
        let e1 = shifted.evaluate(&w)?;
        let r1 = shifted.residuals(&w)?;
        let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        // the Nehari residual is itself a relative difference; compare it absolutely
        for d in [rel(e0.j, e1.j), rel(e0.norm2, e1.norm2), rel(e0.d, e1.d), (r0.nehari - r1.nehari).abs(), rel(r0.strong_l2, r1.strong_l2)] {
            worst = worst.max(d);
        }
        worst_sigma = worst_sigma.max(rel(r0.grad_sigma, r1.grad_sigma));
    }
    let c = format!("grid={grid:?} phases={phases} seed={seed} j={}", crate::fmt17(e0.j));
    let note = format!("sigma-preconditioned residual (flat metric, not covariant) changed by {}", crate::fmt17(worst_sigma));
    Ok(CheckResult::single("gauge.covariance", worst, 0.0, 1e-10, &c, &note))
}

pub fn equivariance_check(u: &ComplexField, spec: &SymmetrySpec) -> Result<CheckResult, AnalysisError> {
    let d = equivariance_defect(u, spec)?;
    let c = format!("grid={:?} k={} m={} plane={:?}", u.grid, spec.k, spec.m, spec.plane);
    Ok(CheckResult::single("symmetry.equivariance_defect", d, 0.0, 1e-10, &c, ""))
}

/// Relative gap between a grid energy and the radial `E_λ`.
pub fn cross_solver_check(grid_energy: f64, profile: &RadialProfile) -> Result<CheckResult, AnalysisError> {
    require_converged(profile)?;
    let rel = ((grid_energy - profile.energy) / profile.energy).abs();
    let c = format!("{} grid_energy={}", profile_context(profile), crate::fmt17(grid_energy));
    Ok(CheckResult::single("cross_solver.energy", rel, 0.0, 0.01, &c, ""))
}

/// Inputs of [`consistency_suite`].
pub struct RunArtifacts<'a> {
    pub ctx: &'a EnergyContext,
    pub field: &'a ComplexField,
    pub spec: &'a SymmetrySpec,
    /// Grid energy of `field` compared against this profile when present.
    pub radial: Option<&'a RadialProfile>,
    pub seed: u64,
}

/// Side of the cube used by the brute-force `D` oracle.
pub const BRUTE_FORCE_N: usize = 12;

/// All cross-module checks, run on scoped threads and returned sorted by name.
pub fn consistency_suite(run: &RunArtifacts) -> Result<Vec<CheckResult>, AnalysisError> {
    let ctx = run.ctx;
    let g = ctx.grid();
    let small = Grid::new(g.dim, g.half_extent, BRUTE_FORCE_N)?;
    let small_kernel = RieszKernel::new(small, ctx.kernel.alpha(), ctx.kernel.rule())?;
    let results: Vec<Result<CheckResult, AnalysisError>> = std::thread::scope(|s| {
        let handles = vec![
            s.spawn(|| d_oracle_check(small, ctx.p(), &small_kernel, run.seed)),
            s.spawn(|| gradient_fd_check(ctx, 10, run.seed)),
            s.spawn(|| gauge_check(ctx, run.field, 5, run.seed)),
            s.spawn(|| equivariance_check(run.field, run.spec)),
            s.spawn(|| match run.radial {
                Some(profile) => cross_solver_check(ctx.j(run.field)?, profile),
                None => Ok(CheckResult::single("cross_solver.energy", 0.0, 0.0, 0.01, "skipped", "no radial profile supplied")),
            }),
        ];
        handles.into_iter().map(|h| h.join().expect("check thread panicked")).collect()
    });
    Ok(sorted(results.into_iter().collect::<Result<Vec<_>, _>>()?))
}

/// Identity (descriptive anchor) and the checks that exercise it.
pub fn coverage_table() -> Vec<(&'static str, &'static str)> {
    vec![
        ("admissible exponent set as an intersection of intervals", "params::lambda_set"),
        ("nonlocal term as a Riesz convolution", "d.fft_vs_brute_force"),
        ("first variation of the energy", "gradient.vs_finite_difference"),
        ("diamagnetic inequality", "field::diamagnetic_check"),
        ("Nehari scaling and mountain-pass value", "energy::nehari_scale"),
        ("limit-problem ground state energy", "cross_solver.energy"),
        ("exponential decay of the ground state", "decay.u.rate, decay.u.power, decay.du.rate, decay.du.power"),
        ("vanishing of the convolution at infinity", "convolution.tail"),
        ("cut-off error rates", "multibump::cutoff_decay_scan"),
        ("intertwining symmetry of solutions", "symmetry.equivariance_defect"),
        ("energy threshold below k copies of the limit level", "multibump::threshold_certificate"),
        ("gauge invariance of the magnetic energy", "gauge.covariance"),
    ]
}

/// Markdown rendering of [`coverage_table`].
pub fn coverage_markdown() -> String {
    let mut s = String::from("| identity | checks |\n|---|---|\n");
    for (a, b) in coverage_table() {
        s.push_str(&format!("| {a} | {b} |\n"));
    }
    s
}
