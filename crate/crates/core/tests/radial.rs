use std::f64::consts::PI;

use choquard::field::{ComplexField, Grid};
use choquard::nonlocal::{riesz_convolve, OriginRule, RieszKernel};
use choquard::radial::*;

fn ground(lambda: f64, p: f64, m: usize) -> RadialProfile {
    let mesh = RadialMesh::new(3, 40.0, m).unwrap();
    solve_ground_state(lambda, 1.0, p, mesh, &GroundStateConfig::default()).unwrap()
}

#[test]
fn zero_density_convolves_to_zero() {
    let mesh = RadialMesh::new(3, 5.0, 50).unwrap();
    assert!(radial_convolve(mesh, &vec![0.0; 50], 1.0).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn negative_density_rejected() {
    let mesh = RadialMesh::new(3, 5.0, 50).unwrap();
    let mut f = vec![1.0; 50];
    f[7] = -1e-3;
    assert!(matches!(radial_convolve(mesh, &f, 1.0), Err(RadialError::Negative { node: 7, .. })));
}

#[test]
fn indicator_potential_matches_closed_form() {
    // faces sit at (i + 1/2)h, so r = 1 is the outer face of cell k
    let k = 200;
    let h = 1.0 / (k as f64 + 0.5);
    let m = 800;
    let mesh = RadialMesh::new(3, h * m as f64, m).unwrap();
    let f: Vec<f64> = (0..m).map(|i| if i <= k { 1.0 } else { 0.0 }).collect();
    let out = radial_convolve(mesh, &f, 1.0).unwrap();
    for (i, v) in out.iter().enumerate() {
        let r = mesh.r(i);
        let exact = if r <= 1.0 { 2.0 * PI * (1.0 - r * r / 3.0) } else { 4.0 * PI / 3.0 / r };
        let tol = if r <= 1.0 { 1e-4 } else { 1e-12 };
        assert!((v / exact - 1.0).abs() < tol, "r = {r}: {v} vs {exact}");
    }
}

#[test]
fn general_alpha_matches_grid_convolution() {
    let alpha = 1.5;
    let mesh = RadialMesh::new(3, 12.0, 1200).unwrap();
    let f: Vec<f64> = mesh.nodes().iter().map(|r| (-r * r).exp()).collect();
    let rad = radial_convolve(mesh, &f, alpha).unwrap();
    let grid = Grid::new(3, 8.0, 128).unwrap();
    let field = ComplexField::from_real(grid, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
    let dens: Vec<f64> = field.values.iter().map(|z| z.re).collect();
    let kernel = RieszKernel::new(grid, alpha, OriginRule::LatticeZeta).unwrap();
    let out = riesz_convolve(&dens, &kernel).unwrap();
    let n = grid.n;
    for i in [n / 2, n / 2 + 4, n / 2 + 8, n / 2 + 16, n / 2 + 32] {
        let r = grid.coord(i);
        let g = out[grid.flat(&[i, n / 2, n / 2])];
        let j = (r / mesh.h()).round() as usize;
        assert!((g / rad[j] - 1.0).abs() < 1e-4, "r = {r}: grid {g} radial {}", rad[j]);
    }
}

#[test]
fn energy_scaling_and_monotonicity() {
    let e: Vec<f64> = [1.0, 2.0, 4.0].iter().map(|&l| ground(l, 2.0, 2000).energy).collect();
    assert!((e[1] / e[0] / 2f64.powf(1.5) - 1.0).abs() < 0.01);
    assert!((e[2] / e[0] / 8.0 - 1.0).abs() < 0.01);
    assert!(e[0] <= e[1] && e[1] <= e[2]);
}

#[test]
fn nehari_identity_and_positivity() {
    let pr = ground(1.0, 2.0, 2000);
    assert!(pr.converged);
    let p = pr.p;
    assert!((pr.energy - (p - 1.0) / (2.0 * p) * pr.norm2).abs() < 1e-10 * pr.energy);
    assert!(pr.nehari_residual < 1e-8);
    let t = choquard::energy::nehari_t(pr.norm2, pr.d, p);
    assert!((t - 1.0).abs() < 1e-8);
    assert!(pr.values.iter().all(|v| *v >= 0.0));
    assert_eq!(pr.monotonicity_violations(), 0);
}

#[test]
fn mesh_refinement_is_stable() {
    let a = ground(1.0, 2.0, 2000).energy;
    let b = ground(1.0, 2.0, 4000).energy;
    assert!((a / b - 1.0).abs() < 1e-4);
}

#[test]
fn synthetic_decay_fit() {
    let mesh = RadialMesh::new(3, 20.0, 2000).unwrap();
    let pr = RadialProfile::synthetic(mesh, 1.0, 2.0, 1.0, |r| if r > 0.0 { (-2.0 * r).exp() / r } else { 1.0 }).unwrap();
    let f = decay_fit(&pr, (8.0, 18.0)).unwrap();
    assert!((f.rate - 2.0).abs() < 1e-3 && (f.power - 1.0).abs() < 1e-2);
}

#[test]
fn decay_fit_rejects_bad_windows() {
    let mesh = RadialMesh::new(3, 20.0, 200).unwrap();
    let pr = RadialProfile::synthetic(mesh, 1.0, 2.0, 1.0, |r| (-r).exp()).unwrap();
    assert!(matches!(decay_fit(&pr, (2.0, 18.0)), Err(RadialError::Window { .. })));
    let zero = RadialProfile::synthetic(mesh, 1.0, 2.0, 1.0, |r| if r < 15.0 { 1.0 } else { 0.0 }).unwrap();
    assert!(matches!(decay_fit(&zero, (8.0, 18.0)), Err(RadialError::Nonpositive { .. })));
}

#[test]
fn ground_state_decay_windows() {
    let lambda: f64 = 1.0;
    let two = ground(lambda, 2.0, 4000);
    let f = decay_fit(&two, (16.0, 36.0)).unwrap();
    assert!(f.rate >= (0.9 * lambda).sqrt() && f.rate <= 1.05 * lambda.sqrt(), "p = 2 rate {}", f.rate);
    let hi = ground(lambda, 2.5, 4000);
    let f = decay_fit(&hi, (16.0, 36.0)).unwrap();
    assert!((f.rate / lambda.sqrt() - 1.0).abs() < 0.02, "p = 2.5 rate {}", f.rate);
}

#[test]
fn small_mesh_rejected() {
    assert!(RadialMesh::new(3, 10.0, 15).is_err());
}
