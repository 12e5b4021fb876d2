use choquard::energy::{mp_closed_form, EnergyContext};
use choquard::field::{ComplexField, Grid, PotentialPair, ScalarPotential, VectorPotential};
use choquard::multibump::*;
use choquard::nonlocal::{OriginRule, RieszKernel};
use choquard::params::ProblemParams;
use choquard::radial::{solve_ground_state, GroundStateConfig, RadialMesh, RadialProfile};
use choquard::symmetry::{act, symmetrize, SymmetrySpec};
use choquard::Complex64;
use proptest::prelude::*;

fn ground(r_max: f64, m: usize) -> RadialProfile {
    solve_ground_state(1.0, 1.0, 2.0, RadialMesh::new(3, r_max, m).unwrap(), &GroundStateConfig::default()).unwrap()
}

fn exp_ctx(grid: Grid, c0_pot: f64, params: &ProblemParams) -> EnergyContext {
    let pot = PotentialPair::sample(grid, &VectorPotential::Zero, &ScalarPotential::ExpApproach { v_inf: 1.0, c0: c0_pot, kappa: 0.5 }).unwrap();
    let kernel = RieszKernel::new(grid, 1.0, OriginRule::LatticeZeta).unwrap();
    EnergyContext::new(params.clone(), pot, kernel).unwrap()
}

fn smoothstep_oracle(t: f64, eps: f64) -> f64 {
    let a = 1.0 - eps;
    if t <= a {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let s = (t - a) / eps;
    1.0 - 3.0 * s.powi(2) + 2.0 * s.powi(3)
}

#[test]
fn cutoff_of_one_is_chi() {
    let grid = Grid::new(2, 1.5, 32).unwrap();
    let one = ComplexField::from_real(grid, |_| 1.0);
    let cut = one.cutoff(1.0, 0.25).unwrap();
    let mut x = [0.0; 2];
    for (i, z) in cut.values.iter().enumerate() {
        grid.point(i, &mut x);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        assert!((z.re - smoothstep_oracle(r, 0.25)).abs() < 1e-15 && z.im == 0.0);
    }
}

#[test]
fn cutoff_leaves_inner_support_unchanged() {
    let grid = Grid::new(3, 4.0, 16).unwrap();
    let u = ComplexField::from_fn(grid, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r < 2.0 {
            Complex64::new(2.0 - r, 0.5)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let cut = u.cutoff(10.0, 0.5).unwrap();
    assert_eq!(cut, u);
    assert!(u.cutoff(0.0, 0.5).is_err());
}

#[test]
fn scan_recovers_model_rates() {
    let mesh = RadialMesh::new(3, 40.0, 4000).unwrap();
    let mut slopes = Vec::new();
    for mu in [0.25f64, 1.0] {
        let s = mu.sqrt();
        let prof = RadialProfile::synthetic(mesh, 1.0, 2.0, 1.0, |r| (-s * r).exp() / r.max(1e-3)).unwrap();
        let rs: Vec<f64> = (0..=10).map(|i| 8.0 + 2.0 * i as f64).collect();
        let scan = cutoff_decay_scan(&prof, mu, 0.1, &rs).unwrap();
        let d = scan.d_slope.unwrap();
        let g = scan.grad_slope.unwrap();
        assert!((d / scan.d_target - 1.0).abs() < 0.1, "mu {mu}: {d} vs {}", scan.d_target);
        assert!((g / scan.grad_target - 1.0).abs() < 0.1, "mu {mu}: {g} vs {}", scan.grad_target);
        assert!(scan.pass);
        slopes.push(d);
    }
    // μ → 4μ doubles the rate
    assert!((slopes[1] / slopes[0] - 2.0).abs() < 0.2);
}

#[test]
fn scan_beyond_support_is_exact_zero() {
    let mesh = RadialMesh::new(3, 30.0, 1500).unwrap();
    let prof = RadialProfile::synthetic(mesh, 1.0, 2.0, 1.0, |r| if r < 5.0 { (-r).exp() * (5.0 - r) } else { 0.0 }).unwrap();
    let scan = cutoff_decay_scan(&prof, 0.5, 0.25, &[8.0, 12.0]).unwrap();
    for row in &scan.rows {
        assert!(row.delta_d < 1e-14 && row.delta_grad < 1e-14);
    }
    assert!(matches!(cutoff_decay_scan(&prof, 0.5, 0.25, &[31.0]), Err(MultibumpError::Domain { .. })));
}

#[test]
fn computed_profile_cutoff_rates() {
    let prof = ground(30.0, 3000);
    let rs: Vec<f64> = (6..=16).map(f64::from).collect();
    // the profile decays at √V∞; any μ < V∞ is admissible, the sharpest bound sits at μ → V∞
    let scan = cutoff_decay_scan(&prof, 0.999, 0.1, &rs).unwrap();
    assert!((scan.d_slope.unwrap() / scan.d_target - 1.0).abs() < 0.1);
    assert!((scan.grad_slope.unwrap() / scan.grad_target - 1.0).abs() < 0.1);
    let design = cutoff_decay_scan(&prof, choose_mu(1.0, 0.5, 1.0).unwrap(), 0.1, &rs).unwrap();
    assert!(design.pass);
}

#[test]
fn r_y_formula_and_limits() {
    assert!((r_y(0.5, 1.0, 1.0, 10.0).unwrap() - 6.25).abs() < 1e-14);
    assert!((r_y(1e-12, 1.0, 1.0, 10.0).unwrap() - 5.0).abs() < 1e-10);
    assert!((r_y(2.0 - 1e-12, 1.0, 1.0, 10.0).unwrap() - 10.0).abs() < 1e-10);
    let err = r_y(2.0, 1.0, 1.0, 10.0).unwrap_err();
    assert!(err.to_string().contains("kappa"));
}

#[test]
fn mu_choice_satisfies_window() {
    for (kappa, delta) in [(0.5, 1.0), (0.5, std::f64::consts::FRAC_1_SQRT_2), (1.9, 1.0), (0.1, 0.5)] {
        let mu = choose_mu(1.0, kappa, delta).unwrap();
        assert!(mu > 0.0 && mu < 1.0);
        assert!(kappa < 2.0 * delta * mu.sqrt());
    }
    assert!(choose_mu(1.0, 2.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn r_y_stays_inside_orbit_gap(delta in 0.05f64..1.0, mu in 0.01f64..4.0, frac in 0.001f64..0.999, y in 0.1f64..100.0) {
        let kappa = frac * 2.0 * delta * mu.sqrt();
        let r = r_y(kappa, delta, mu, y).unwrap();
        prop_assert!(r > 0.0 && r < delta * y);
    }

    #[test]
    fn cutoff_never_grows_l2(r in 0.2f64..6.0, eps in 0.05f64..0.95, a in 0.1f64..3.0) {
        let grid = Grid::new(2, 4.0, 16).unwrap();
        let u = ComplexField::from_fn(grid, |x| Complex64::new((-a * x[0] * x[0]).exp(), x[1].sin()));
        prop_assert!(u.cutoff(r, eps).unwrap().l2_norm() <= u.l2_norm());
    }
}

fn plan(prof: &RadialProfile, k: usize, rho0: f64) -> BumpPlan {
    BumpPlan::new(prof.clone(), SymmetrySpec::new(k, 1 % k, (0, 1)).unwrap(), &ProblemParams::reference(), rho0).unwrap()
}

#[test]
fn theta_is_equivariant() {
    let prof = ground(16.0, 800);
    let grid = Grid::new(3, 10.0, 32).unwrap();
    let p2 = plan(&prof, 2, 5.0);
    let theta = build_theta(&p2, grid).unwrap();
    let half = act(&theta, 1, &p2.spec).unwrap();
    assert!(half.max_diff(&theta) < 1e-12);
    assert!(symmetrize(&theta, &p2.spec).unwrap().max_diff(&theta) < 1e-12);
    let p4 = plan(&prof, 4, 5.0);
    let theta4 = build_theta(&p4, grid).unwrap();
    assert_eq!(symmetrize(&theta4, &p4.spec).unwrap().max_diff(&theta4), 0.0);
    let p1 = plan(&prof, 1, 3.0);
    assert_eq!(build_theta(&p1, grid).unwrap(), build_single(&p1, grid).unwrap());
}

#[test]
fn invalid_plans_rejected() {
    let prof = ground(16.0, 800);
    let grid = Grid::new(3, 6.0, 16).unwrap();
    let mut p = plan(&prof, 2, 5.0);
    assert!(matches!(build_theta(&p, grid), Err(MultibumpError::Padding { .. })));
    p.r_y = 5.0;
    assert!(matches!(p.validate(), Err(MultibumpError::PlanRadius { .. })));
    let mut q = plan(&prof, 4, 5.0);
    q.delta_tau = 1.0;
    q.r_y = 4.0;
    assert!(matches!(q.validate(), Err(MultibumpError::Overlap { .. })));
}

#[test]
fn grid_norm_splits_and_d_gains_cross_term() {
    let prof = ground(16.0, 800);
    // wide transition so the grid resolves χ; all pair offsets stay below L so no image wraps
    let params = ProblemParams { epsilon_cutoff: 0.5, ..ProblemParams::reference() };
    let grid = Grid::new(3, 16.0, 48).unwrap();
    let ctx = exp_ctx(grid, 0.5, &params);
    let p2 = BumpPlan::new(prof, SymmetrySpec::new(2, 1, (0, 1)).unwrap(), &params, 4.5).unwrap();
    let theta = build_theta(&p2, grid).unwrap();
    let single = build_single(&p2, grid).unwrap();
    let (nt, ns) = (ctx.norm2(&theta).unwrap(), ctx.norm2(&single).unwrap());
    assert!((nt - 2.0 * ns).abs() < 1e-4 * nt, "{nt} vs {}", 2.0 * ns);
    let (dt, ds) = (ctx.d(&theta).unwrap(), ctx.d(&single).unwrap());
    assert!(dt > 2.0 * ds);
    for t in [0.5, 1.0, 2.0] {
        let jt = 0.5 * t * t * nt - t.powi(4) * dt / 4.0;
        let js = 0.5 * t * t * ns - t.powi(4) * ds / 4.0;
        assert!(jt <= 2.0 * js + 1e-12);
    }
    assert!(mp_closed_form(nt, dt, 2.0) <= 2.0 * mp_closed_form(ns, ds, 2.0));
    let cert = threshold_certificate(&p2, &ctx).unwrap();
    assert!(((dt - 2.0 * ds) / cert.cross_term - 1.0).abs() < 0.01, "{} vs {}", dt - 2.0 * ds, cert.cross_term);
    assert!((mp_closed_form(ns, ds, 2.0) / cert.max_t_j_single - 1.0).abs() < 0.01);
}

#[test]
fn certificate_sweep_gap_decays_at_kappa() {
    let prof = ground(30.0, 3000);
    let params = ProblemParams::reference();
    let ctx = exp_ctx(Grid::new(3, 8.0, 16).unwrap(), 0.5, &params);
    let spec = SymmetrySpec::new(2, 1, (0, 1)).unwrap();
    let sweep = threshold_sweep(&prof, spec, &params, &ctx, &[16.0, 18.0, 20.0, 22.0, 24.0, 26.0, 28.0]).unwrap();
    assert!(sweep.rows.iter().all(|r| r.certified && r.gap > 0.0 && r.split_gap > 0.0));
    assert!(sweep.rows.iter().all(|r| r.max_t_j_theta <= r.k as f64 * r.max_t_j_single));
    let kf = sweep.kappa_fit.unwrap();
    assert!((kf / 0.5 - 1.0).abs() < 0.15, "kappa fit {kf}");
    assert!(sweep.d0_fit.unwrap() > 0.0);
}

#[test]
fn degenerate_well_is_refused() {
    let prof = ground(30.0, 3000);
    let params = ProblemParams { c0: 0.0, ..ProblemParams::reference() };
    let grid = Grid::new(3, 8.0, 16).unwrap();
    let pot = PotentialPair::constant(grid, 1.0).unwrap();
    let ctx = EnergyContext::new(params.clone(), pot, RieszKernel::new(grid, 1.0, OriginRule::LatticeZeta).unwrap()).unwrap();
    let cert = threshold_certificate(&plan(&prof, 2, 20.0), &ctx).unwrap();
    assert!(!cert.certified);
    assert!(cert.split_gap <= 0.0);
    assert!(cert.refusal.unwrap().contains("c0 = 0"));
}

#[test]
fn deeper_well_widens_gap() {
    let prof = ground(30.0, 3000);
    let grid = Grid::new(3, 8.0, 16).unwrap();
    let mut gaps = Vec::new();
    for c0 in [0.3, 0.6] {
        let params = ProblemParams { c0, ..ProblemParams::reference() };
        let ctx = exp_ctx(grid, c0, &params);
        gaps.push(threshold_certificate(&plan(&prof, 2, 20.0), &ctx).unwrap().split_gap);
    }
    assert!(gaps[1] > gaps[0]);
}

#[test]
fn h2_violation_reports_node() {
    let prof = ground(16.0, 800);
    let params = ProblemParams::reference();
    let ctx = exp_ctx(Grid::new(3, 8.0, 16).unwrap(), 0.2, &params);
    let err = threshold_certificate(&plan(&prof, 2, 10.0), &ctx).unwrap_err();
    assert!(matches!(err, MultibumpError::H2 { .. }), "{err}");
}
