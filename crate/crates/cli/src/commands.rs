//! One function per subcommand; each writes an artifact directory and returns the exit code.

use std::path::{Path, PathBuf};

use choquard::analysis::{appendix_decay_suite, checks_csv, checks_json, decay_window, kkstar_decay_of_convolution, AnalysisError};
use choquard::fit::log_linear_rate;
use choquard::fmt17;
use choquard::multibump::{threshold_sweep, MultibumpError};
use choquard::params::validate as validate_params;
use choquard::radial::{decay_fit, solve_ground_state, DecayFit, RadialError, RadialProfile};
use choquard::snapshot;
use choquard::solver::{ps_monitor, solve as solve_field, SolveError};
use choquard::symmetry::compat_check;
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, Workflow};
use crate::manifest::Bundle;
use crate::CliError;

pub struct Outcome {
    pub code: i32,
    pub dir: PathBuf,
    pub summary: serde_json::Value,
}

fn radial_err(e: RadialError) -> CliError {
    match e {
        RadialError::NotConverged { .. } => CliError::NotConverged(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

fn solve_err(e: SolveError) -> CliError {
    match e {
        SolveError::NonFinite { .. } => CliError::NotConverged(e.to_string()),
        SolveError::Config(_) | SolveError::DegenerateGuess(_) => CliError::Config(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

fn multibump_err(e: MultibumpError) -> CliError {
    match e {
        MultibumpError::Radial(r) => radial_err(r),
        other => CliError::Validation(other.to_string()),
    }
}

fn analysis_err(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::Unconverged => CliError::NotConverged(e.to_string()),
        AnalysisError::Radial(r) => radial_err(r),
        other => CliError::Validation(other.to_string()),
    }
}

/// Energy exponent `e` in `E_λ = λ^e E_1` from the scaling `u(x) = a·w(√λ x)`.
pub fn scaling_exponent(dim: usize, alpha: f64, p: f64) -> f64 {
    let n = dim as f64;
    (2.0 + n - alpha) / (2.0 * (p - 1.0)) + 1.0 - n / 2.0
}

/// Limit ground states for every `λ`, solved concurrently and returned in input order.
fn ground_states(cfg: &RunConfig, lambdas: &[f64]) -> Result<Vec<RadialProfile>, CliError> {
    let mesh = cfg.mesh()?;
    let gcfg = cfg.ground_config();
    let (alpha, p) = (cfg.problem.alpha, cfg.problem.p);
    let results: Vec<Result<RadialProfile, RadialError>> = std::thread::scope(|s| {
        let handles: Vec<_> = lambdas.iter().map(|&l| s.spawn(move || solve_ground_state(l, alpha, p, mesh, &gcfg))).collect();
        handles.into_iter().map(|h| h.join().expect("ground state worker panicked")).collect()
    });
    results.into_iter().map(|r| r.map_err(radial_err)).collect()
}

pub fn validate(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let params = cfg.params();
    let report = validate_params(&params, cfg.symmetry.as_ref());
    let compat = match cfg.grid {
        Some(_) => Some(compat_check(&cfg.potentials()?, &cfg.spec()).map_err(|e| CliError::Config(e.to_string()))?),
        None => None,
    };
    let ok = report.admissible && compat.as_ref().map_or(true, |c| c.compatible);
    let summary = json!({
        "admissible": report.admissible,
        "compatible": compat.as_ref().map(|c| c.compatible),
        "ok": ok,
        "violations": report.violations,
        "lambda_set": report.lambda_set,
        "delta_tau": report.delta_tau,
        "nonrigorous": report.nonrigorous,
        "report": report,
        "compat": compat,
    });
    let mut b = Bundle::default();
    b.add_json("validation.json", &summary);
    let dir = b.write(&out.join("validate"), "validate", cfg)?;
    Ok(Outcome { code: if ok { 0 } else { 1 }, dir, summary })
}

#[derive(Serialize)]
struct GroundRow {
    lambda: f64,
    energy: f64,
    norm2: f64,
    d: f64,
    iterations: usize,
    grad_residual: f64,
    nehari_residual: f64,
    decay: Option<DecayFit>,
    decay_error: Option<String>,
}

pub fn ground(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let lambdas = cfg.lambdas();
    let profiles = ground_states(cfg, &lambdas)?;
    let mut b = Bundle::default();
    let mut csv = String::from("lambda,energy,norm2,d,iterations,grad_residual,decay_rate,decay_power\n");
    let mut rows = Vec::new();
    for (i, prof) in profiles.iter().enumerate() {
        let fit = decay_fit(prof, decay_window(prof.r_max()));
        let (rate, power) = fit.as_ref().map_or((f64::NAN, f64::NAN), |f| (f.rate, f.power));
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt17(prof.lambda),
            fmt17(prof.energy),
            fmt17(prof.norm2),
            fmt17(prof.d),
            prof.iterations,
            fmt17(prof.grad_residual),
            fmt17(rate),
            fmt17(power)
        ));
        b.add(&format!("profile_{i:02}.csv"), prof.to_csv().into_bytes());
        rows.push(GroundRow {
            lambda: prof.lambda,
            energy: prof.energy,
            norm2: prof.norm2,
            d: prof.d,
            iterations: prof.iterations,
            grad_residual: prof.grad_residual,
            nehari_residual: prof.nehari_residual,
            decay_error: fit.as_ref().err().map(|e| e.to_string()),
            decay: fit.ok(),
        });
    }
    let fitted = if lambdas.len() >= 2 {
        let x: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
        let y: Vec<f64> = profiles.iter().map(|p| p.energy).collect();
        log_linear_rate(&x, &y).map(|(rate, _, _)| -rate)
    } else {
        None
    };
    let summary = json!({
        "lambdas": lambdas,
        "scaling_exponent_fit": fitted,
        "scaling_exponent_expected": scaling_exponent(cfg.problem.dim, cfg.problem.alpha, cfg.problem.p),
        "decay_window": decay_window(cfg.radial.r_max),
        "rows": rows,
    });
    b.add("energies.csv", csv.into_bytes());
    b.add_json("ground.json", &summary);
    let dir = b.write(&out.join("ground"), "ground", cfg)?;
    Ok(Outcome { code: 0, dir, summary })
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let ctx = cfg.context()?;
    let spec = cfg.spec();
    let report = solve_field(&ctx, &spec, &cfg.solver).map_err(solve_err)?;
    let ps = ps_monitor(&report);
    let mut b = Bundle::default();
    b.add_json("solve.json", &report);
    b.add_json("ps.json", &ps);
    b.add("trace.csv", report.trace_csv().into_bytes());
    b.add("field.bin", snapshot::encode(&report.field));
    let meta = json!({ "grid": { "dim": ctx.grid().dim, "n": ctx.grid().n, "half_extent": ctx.grid().half_extent }, "symmetry": spec, "energy": report.energy, "converged": report.converged });
    b.add_json("field.bin.json", &meta);
    let dir = b.write(&out.join("solve"), "solve", cfg)?;
    let summary = json!({
        "energy": report.energy,
        "converged": report.converged,
        "iterations": report.iterations,
        "grad_residual": report.grad_residual,
        "nehari_residual": report.nehari_residual,
        "equivariance_defect": report.equivariance_defect,
        "winding_number": report.winding_number,
    });
    Ok(Outcome { code: if report.converged { 0 } else { 2 }, dir, summary })
}

pub fn bumps(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let params = cfg.params();
    let ctx = cfg.context()?;
    let profile = ground_states(cfg, &[cfg.problem.v_inf])?.remove(0);
    let sweep = threshold_sweep(&profile, cfg.spec(), &params, &ctx, &cfg.bumps.rho0).map_err(multibump_err)?;
    let mut csv = String::from("rho0,R_y,E_Vinf,k_E_Vinf,max_t_J_theta,gap,split_gap,cross_term,certified\n");
    for r in &sweep.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt17(r.rho0),
            fmt17(r.r_y),
            fmt17(r.e_vinf),
            fmt17(r.k_e_vinf),
            fmt17(r.max_t_j_theta),
            fmt17(r.gap),
            fmt17(r.split_gap),
            fmt17(r.cross_term),
            r.certified
        ));
    }
    let certified = sweep.rows.iter().all(|r| r.certified);
    let mut b = Bundle::default();
    b.add_json("certificate.json", &sweep);
    b.add("certificate.csv", csv.into_bytes());
    let dir = b.write(&out.join("bumps"), "bumps", cfg)?;
    let refusals: Vec<&str> = sweep.rows.iter().filter_map(|r| r.refusal.as_deref()).collect();
    let summary = json!({ "certified": certified, "kappa_fit": sweep.kappa_fit, "d0_fit": sweep.d0_fit, "refusals": refusals });
    Ok(Outcome { code: if certified { 0 } else { 1 }, dir, summary })
}

pub fn decay(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let params = cfg.params();
    let profile = ground_states(cfg, &[cfg.problem.v_inf])?.remove(0);
    let mut checks = appendix_decay_suite(&params, &profile).map_err(analysis_err)?;
    checks.push(kkstar_decay_of_convolution(&profile, &params).map_err(analysis_err)?);
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let pass = checks.iter().all(|c| c.pass);
    let mut b = Bundle::default();
    b.add("checks.csv", checks_csv(&checks).into_bytes());
    b.add_json("checks.json", &checks_json(&checks));
    let dir = b.write(&out.join("decay"), "decay", cfg)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    Ok(Outcome { code: if pass { 0 } else { 1 }, dir, summary: json!({ "pass": pass, "failed": failed }) })
}

pub fn run(workflow: Workflow, cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    if let Some(w) = cfg.workflow {
        if w != workflow && workflow != Workflow::Validate {
            return Err(CliError::Config(format!("config declares workflow {}, not {}", w.name(), workflow.name())));
        }
    }
    match workflow {
        Workflow::Validate => validate(cfg, out),
        Workflow::Ground => ground(cfg, out),
        Workflow::Solve => solve(cfg, out),
        Workflow::Bumps => bumps(cfg, out),
        Workflow::Decay => decay(cfg, out),
    }
}
