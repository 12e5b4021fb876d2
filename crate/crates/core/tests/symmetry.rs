use choquard::field::{random_smooth, ComplexField, Grid, PotentialPair, ScalarPotential, VectorPotential};
use choquard::symmetry::*;
use choquard::Complex64;
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::new(3, 6.0, 16).unwrap()
}

/// `(x + iy)^m e^{−|x|²}`; the unpaired boundary plane holds values below 1e-12 of the peak.
fn vortex(grid: Grid, m: i32) -> ComplexField {
    ComplexField::from_fn(grid, |x| Complex64::new(x[0], x[1]).powi(m) * (-x.iter().map(|v| v * v).sum::<f64>()).exp())
}

#[test]
fn identity_element_acts_trivially() {
    let u = random_smooth(grid(), 1, 3, 2.0);
    for spec in [SymmetrySpec::new(4, 1, (0, 1)).unwrap(), SymmetrySpec::new(3, 2, (1, 2)).unwrap()] {
        assert_eq!(act(&u, 0, &spec).unwrap(), u);
    }
}

#[test]
fn quarter_turn_is_a_lattice_permutation_times_i() {
    let g = grid();
    let n = g.n;
    let u = random_smooth(g, 2, 3, 2.0);
    let w = act(&u, 1, &SymmetrySpec::new(4, 1, (0, 1)).unwrap()).unwrap();
    for i0 in 0..n {
        for i1 in 0..n {
            for i2 in 0..n {
                let src = u.values[g.flat(&[i1, (n - i0) % n, i2])];
                assert_eq!(w.values[g.flat(&[i0, i1, i2])], Complex64::new(-src.im, src.re));
            }
        }
    }
}

#[test]
fn action_preserves_norms() {
    let u = random_smooth(grid(), 3, 3, 2.0);
    let spec = SymmetrySpec::new(4, 3, (0, 2)).unwrap();
    for j in 0..4 {
        let w = act(&u, j, &spec).unwrap();
        assert!((w.l2_norm() - u.l2_norm()).abs() <= 1e-14 * u.l2_norm());
        assert_eq!(w.max_abs(), u.max_abs());
    }
}

#[test]
fn symmetrize_projects_onto_equivariant_fields() {
    let spec = SymmetrySpec::new(4, 1, (0, 1)).unwrap();
    let v = vortex(grid(), 1);
    assert!(equivariance_defect(&v, &spec).unwrap() <= 1e-12);
    assert!(symmetrize(&v, &spec).unwrap().max_diff(&v) <= 1e-12 * v.max_abs());
    let u = random_smooth(grid(), 4, 3, 2.0);
    let p = symmetrize(&u, &spec).unwrap();
    assert!(equivariance_defect(&p, &spec).unwrap() <= 1e-15);
    assert!(symmetrize(&p, &spec).unwrap().max_diff(&p) <= 1e-15 * p.max_abs());
}

#[test]
fn odd_character_kills_even_bumps() {
    let spec = SymmetrySpec::new(2, 1, (0, 1)).unwrap();
    let u = ComplexField::from_real(grid(), |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
    assert_eq!(symmetrize(&u, &spec).unwrap().max_abs(), 0.0);
}

#[test]
fn winding_numbers() {
    let g = Grid::new(3, 6.0, 32).unwrap();
    let k4 = SymmetrySpec::new(4, 1, (0, 1)).unwrap();
    let bump = ComplexField::from_real(g, |x| (-x.iter().map(|v| v * v).sum::<f64>() / 2.0).exp());
    assert_eq!(winding_number(&bump, 1.0, &k4).unwrap(), 0);
    assert_eq!(winding_number(&vortex(g, 1), 1.0, &k4).unwrap(), 1);
    let k43 = SymmetrySpec::new(4, 3, (0, 1)).unwrap();
    let v3 = vortex(g, 3);
    assert!(equivariance_defect(&v3, &k43).unwrap() <= 1e-12);
    assert_eq!(winding_number(&v3, 1.0, &k43).unwrap(), 3);
    assert!(matches!(winding_number(&ComplexField::zeros(g), 1.0, &k4), Err(SymmetryError::DegenerateLoop { .. })));
    assert!(matches!(winding_number(&bump, 6.0, &k4), Err(SymmetryError::Radius { .. })));
}

#[test]
fn compatibility_of_potentials() {
    let g = grid();
    let k4 = SymmetrySpec::new(4, 1, (0, 1)).unwrap();
    let field = VectorPotential::ConstantField { strength: 0.3, plane: (0, 1) };
    let radial = PotentialPair::sample(g, &field, &ScalarPotential::Well { v_inf: 1.0, depth: 0.5, width: 1.5 }).unwrap();
    let rep = compat_check(&radial, &k4).unwrap();
    assert!(rep.compatible && rep.lattice_exact, "{rep:?}");
    assert!(compat_check(&PotentialPair::constant(g, 2.0).unwrap(), &k4).unwrap().compatible);
    let bump = ScalarPotential::OffAxisBump { v_inf: 1.0, amplitude: 0.3, center: vec![1.5, 0.0, 0.0], width: 0.5 };
    let rep = compat_check(&PotentialPair::sample(g, &field, &bump).unwrap(), &k4).unwrap();
    assert!(!rep.compatible);
    assert!((rep.max_v_violation - 0.3).abs() < 1e-3, "{}", rep.max_v_violation);
    assert!(rep.max_a_violation < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn action_is_a_group_homomorphism(seed in 0u64..1000, a in 0usize..4, b in 0usize..4, m in 0usize..4) {
        let spec = SymmetrySpec::new(4, m, (0, 1)).unwrap();
        let u = random_smooth(Grid::new(3, 5.0, 8).unwrap(), seed, 2, 2.0);
        let lhs = act(&act(&u, b, &spec).unwrap(), a, &spec).unwrap();
        let rhs = act(&u, (a + b) % 4, &spec).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn symmetrize_is_idempotent(seed in 0u64..1000, m in 0usize..4) {
        let spec = SymmetrySpec::new(4, m, (1, 2)).unwrap();
        let p = symmetrize(&random_smooth(Grid::new(3, 5.0, 8).unwrap(), seed, 2, 2.0), &spec).unwrap();
        let q = symmetrize(&p, &spec).unwrap();
        prop_assert!(q.max_diff(&p) <= 1e-15 * p.max_abs().max(1e-300));
    }
}
