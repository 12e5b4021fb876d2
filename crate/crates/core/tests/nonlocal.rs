use std::f64::consts::PI;

use choquard::analysis::brute_force_d;
use choquard::field::{random_smooth, ComplexField, Grid};
use choquard::nonlocal::*;
use choquard::symmetry::{act, SymmetrySpec};
use choquard::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erf;

fn kernel(grid: Grid, alpha: f64) -> RieszKernel {
    RieszKernel::new(grid, alpha, OriginRule::LatticeZeta).unwrap()
}

fn random_field(grid: Grid, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexField { grid, values: (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect() }
}

/// Cyclic shift by whole lattice steps.
fn roll(u: &ComplexField, shift: &[usize]) -> ComplexField {
    let g = u.grid;
    let mut out = ComplexField::zeros(g);
    for i in 0..g.len() {
        let idx: Vec<usize> = (0..g.dim).map(|a| (g.axis_index(i, a) + shift[a]) % g.n).collect();
        out.values[g.flat(&idx)] = u.values[i];
    }
    out
}

#[test]
fn zero_density_gives_zero() {
    let grid = Grid::new(3, 4.0, 8).unwrap();
    assert!(riesz_convolve(&vec![0.0; grid.len()], &kernel(grid, 1.0)).unwrap().iter().all(|v| *v == 0.0));
    assert_eq!(d_value(&ComplexField::zeros(grid), 2.0, &kernel(grid, 1.0)).unwrap(), 0.0);
}

#[test]
fn single_cell_mass_gives_power_law() {
    let grid = Grid::new(2, 3.0, 12).unwrap();
    let mut f = vec![0.0; grid.len()];
    let c = grid.flat(&[6, 6]);
    f[c] = 0.7;
    let out = riesz_convolve(&f, &kernel(grid, 0.8)).unwrap();
    let mut x = [0.0; 2];
    for (i, v) in out.iter().enumerate() {
        if i == c {
            continue;
        }
        grid.point(i, &mut x);
        let expect = 0.7 * grid.cell_volume() / (x[0] * x[0] + x[1] * x[1]).sqrt().powf(0.8);
        assert!((v - expect).abs() <= 1e-12 * expect);
    }
}

fn newton_error(n: usize) -> f64 {
    let grid = Grid::new(3, 10.0, n).unwrap();
    let f: Vec<f64> = grid.points().map(|x| (-x.iter().map(|v| v * v).sum::<f64>()).exp()).collect();
    let out = riesz_convolve(&f, &kernel(grid, 1.0)).unwrap();
    // (4π/r)∫₀^r s²e^{−s²}ds + 4π∫_r^∞ s e^{−s²}ds = π^{3/2} erf(r)/r
    let exact = |r: f64| if r == 0.0 { 2.0 * PI } else { PI.powf(1.5) * erf(r) / r };
    grid.points()
        .zip(&out)
        .filter(|(x, _)| x.iter().map(|v| v * v).sum::<f64>() <= 25.0)
        .map(|(x, v)| (v / exact(x.iter().map(|v| v * v).sum::<f64>().sqrt()) - 1.0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn gaussian_matches_newtonian_potential() {
    let (e48, e96) = (newton_error(48), newton_error(96));
    assert!(e96 < 2e-4, "n=96 error {e96:e}");
    assert!((e48 / e96).log2() >= 3.0, "order {}", (e48 / e96).log2());
}

#[test]
fn fft_matches_brute_force_on_eight_cube() {
    let grid = Grid::new(3, 2.0, 8).unwrap();
    for (alpha, p) in [(1.0, 2.0), (2.2, 2.7)] {
        let k = kernel(grid, alpha);
        let u = random_field(grid, 8);
        let fast = d_value(&u, p, &k).unwrap();
        let slow = brute_force_d(&u, p, &k).unwrap();
        assert!(((fast - slow) / slow).abs() <= 1e-10);
    }
}

#[test]
fn lattice_translation_leaves_d_unchanged() {
    let grid = Grid::new(3, 8.0, 32).unwrap();
    let k = kernel(grid, 1.0);
    let u = ComplexField::from_fn(grid, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(), 0.2 * x[1] * (-x[1] * x[1]).exp()));
    let moved = roll(&u, &[3, 29, 5]);
    let (a, b) = (d_value(&u, 2.0, &k).unwrap(), d_value(&moved, 2.0, &k).unwrap());
    assert!((a - b).abs() <= 1e-10 * a);
    let (ha, hb) = (hls_check(&u, 2.0, &k, None).unwrap(), hls_check(&moved, 2.0, &k, None).unwrap());
    assert!((ha.ratio - hb.ratio).abs() <= 1e-10 * ha.ratio);
}

#[test]
fn pairing_examples() {
    let grid = Grid::new(3, 3.0, 12).unwrap();
    let k = kernel(grid, 1.0);
    let u = random_field(grid, 1);
    let v = random_field(grid, 2);
    assert_eq!(d_prime_pairing(&u, &ComplexField::zeros(grid), 2.5, &k).unwrap(), 0.0);
    for p in [2.0, 2.5] {
        let d = d_value(&u, p, &k).unwrap();
        assert!((d_prime_pairing(&u, &u, p, &k).unwrap() - 2.0 * p * d).abs() <= 1e-12 * d);
        let t = 1e-5;
        let fd = (d_value(&u.axpy(t, &v), p, &k).unwrap() - d_value(&u.axpy(-t, &v), p, &k).unwrap()) / (2.0 * t);
        let an = d_prime_pairing(&u, &v, p, &k).unwrap();
        assert!(((fd - an) / an).abs() <= 1e-6, "p {p}: {fd} vs {an}");
    }
    assert!(matches!(d_prime_pairing(&u, &v, 1.9, &k), Err(NonlocalError::PBelowTwo(_))));
}

#[test]
fn hls_examples() {
    let grid = Grid::new(3, 6.0, 24).unwrap();
    let k = kernel(grid, 1.0);
    let zero = hls_check(&ComplexField::zeros(grid), 2.0, &k, Some(3.0)).unwrap();
    assert_eq!((zero.d_value, zero.lpr_power, zero.bound), (0.0, 0.0, Some(0.0)));
    let u = ComplexField::from_real(grid, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
    let a = hls_check(&u, 2.0, &k, None).unwrap();
    let b = hls_check(&u.scaled(3.7), 2.0, &k, None).unwrap();
    assert!(a.finite && (a.ratio - b.ratio).abs() <= 1e-12 * a.ratio);
}

#[test]
fn group_action_preserves_d() {
    let grid = Grid::new(3, 6.0, 16).unwrap();
    let k = kernel(grid, 1.0);
    let u = random_smooth(grid, 5, 3, 2.0);
    let d = d_value(&u, 2.0, &k).unwrap();
    for spec in [SymmetrySpec::new(2, 1, (0, 1)).unwrap(), SymmetrySpec::new(4, 3, (1, 2)).unwrap()] {
        for j in 0..spec.k {
            let g = act(&u, j, &spec).unwrap();
            assert!((d_value(&g, 2.0, &k).unwrap() - d).abs() <= 1e-10 * d);
        }
    }
}

#[test]
fn resampled_rotation_preserves_d_to_second_order() {
    // bilinear resampling: the defect shrinks like h² instead of vanishing
    let errs: Vec<f64> = [32, 64]
        .iter()
        .map(|&n| {
            let grid = Grid::new(3, 6.0, n).unwrap();
            let k = kernel(grid, 1.0);
            let u = random_smooth(grid, 5, 3, 2.0);
            let d = d_value(&u, 2.0, &k).unwrap();
            let g = act(&u, 1, &SymmetrySpec::new(3, 1, (0, 1)).unwrap()).unwrap();
            (d_value(&g, 2.0, &k).unwrap() / d - 1.0).abs()
        })
        .collect();
    assert!(errs[1] < 3e-2 && (errs[0] / errs[1]).log2() > 1.7, "{errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convolution_is_self_adjoint(s1 in 0u64..1000, s2 in 0u64..1000, alpha in 0.2f64..1.8) {
        let grid = Grid::new(2, 3.0, 16).unwrap();
        let k = kernel(grid, alpha);
        let mut r1 = ChaCha8Rng::seed_from_u64(s1);
        let mut r2 = ChaCha8Rng::seed_from_u64(s2);
        let f: Vec<f64> = (0..grid.len()).map(|_| r1.gen_range(0.0..1.0)).collect();
        let g: Vec<f64> = (0..grid.len()).map(|_| r2.gen_range(0.0..1.0)).collect();
        let kf = riesz_convolve(&f, &k).unwrap();
        let kg = riesz_convolve(&g, &k).unwrap();
        let a: f64 = kf.iter().zip(&g).map(|(x, y)| x * y).sum();
        let b: f64 = kg.iter().zip(&f).map(|(x, y)| x * y).sum();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn convolution_is_monotone(seed in 0u64..1000) {
        let grid = Grid::new(3, 3.0, 8).unwrap();
        let k = kernel(grid, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let g: Vec<f64> = f.iter().map(|v| v + rng.gen_range(0.0..0.5)).collect();
        let (kf, kg) = (riesz_convolve(&f, &k).unwrap(), riesz_convolve(&g, &k).unwrap());
        let top = kg.iter().cloned().fold(0.0, f64::max);
        // FFT round-off is the only slack
        prop_assert!(kf.iter().zip(&kg).all(|(a, b)| *a <= *b + 1e-13 * top));
    }

    #[test]
    fn fft_equals_brute_force_small_grids(n in prop::sample::select(vec![4usize, 6, 8, 10, 12]), seed in 0u64..100, p in 2.0f64..3.0) {
        let grid = Grid::new(2, 2.5, n).unwrap();
        let k = kernel(grid, 1.3);
        let u = random_field(grid, seed);
        let fast = d_value(&u, p, &k).unwrap();
        let slow = brute_force_d(&u, p, &k).unwrap();
        prop_assert!(((fast - slow) / slow).abs() <= 1e-10);
    }
}
