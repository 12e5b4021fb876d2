use choquard::params::*;
use choquard::symmetry::{SymmetryError, SymmetrySpec};
use proptest::prelude::*;

/// Independent rendering of the four defining intervals as `(lo, lo_closed, hi, hi_closed)`.
fn oracle_intervals(n: f64, a: f64, p: f64) -> [(f64, bool, f64, bool); 4] {
    [
        (2.0, true, 2.0 * n / (n - 2.0), true),
        (p, false, p * n / (n - a), false),
        ((2.0 * p - 2.0) * n / (n + 2.0 - a), false, (2.0 * p - 1.0) * n / (n + 2.0 - a), true),
        ((2.0 * p - 1.0) * n / (2.0 * n - a), true, f64::INFINITY, false),
    ]
}

fn oracle_contains(ivs: &[(f64, bool, f64, bool)], x: f64) -> bool {
    ivs.iter().all(|&(lo, lc, hi, hc)| (if lc { x >= lo } else { x > lo }) && (if hc { x <= hi } else { x < hi }))
}

#[test]
fn reference_exponents_admissible() {
    let rep = validate(&ProblemParams::reference(), None);
    assert!(rep.admissible, "{:?}", rep.violations);
    assert_eq!(rep.standing_window, "(5/3, 5)");
    assert_eq!(rep.lambda_set, "(2, 9/4]");
}

#[test]
fn p_six_violates_upper_bound() {
    let rep = validate(&ProblemParams::with_exponents(3, 1.0, 6.0), None);
    assert!(!rep.admissible);
    let v = rep.violations.iter().find(|v| v.code == "p_upper").unwrap();
    assert!(v.message.contains("(2N - alpha)/(N - 2) = 5"), "{}", v.message);
}

#[test]
fn large_alpha_window_contains_two() {
    let p = ProblemParams::with_exponents(3, 2.5, 2.0);
    let (lo, hi) = p.standing_window();
    assert!((lo - (2.0 - 2.5 / 3.0)).abs() < 1e-15 && (hi - 3.5).abs() < 1e-15);
    assert!(lo < 2.0 && 2.0 < hi);
    assert!(validate(&p, None).admissible);
}

#[test]
fn lambda_set_reference_is_two_to_nine_quarters() {
    let set = lambda_set(&ProblemParams::reference());
    let iv = set.intersection.unwrap();
    assert_eq!(iv.to_string(), "(2, 9/4]");
    assert_eq!(iv.endpoints(), (2.0, 2.25));
    assert_eq!(iv.closedness(), (false, true));
    assert!(iv.contains(2.25) && !iv.contains(2.0));
    assert!(set.exact);
}

#[test]
fn lambda_set_four_dimensions() {
    let set = lambda_set(&ProblemParams::with_exponents(4, 2.0, 2.0));
    assert_eq!(set.intersection.unwrap().to_string(), "(2, 3]");
    let ivs = oracle_intervals(4.0, 2.0, 2.0);
    for x in [2.0, 2.0001, 2.5, 3.0, 3.0001] {
        assert_eq!(set.intersection.unwrap().contains(x), oracle_contains(&ivs, x), "x = {x}");
    }
}

#[test]
fn empty_lambda_names_first_pair() {
    let mut params = ProblemParams::with_exponents(3, 1.0, 1.8);
    params.claims.h1 = true;
    let set = lambda_set(&params);
    assert!(set.is_empty());
    assert_eq!(set.first_empty_pair, Some((0, 2)));
    let rep = validate(&params, None);
    assert_eq!(rep.first_empty_pair.as_deref(), Some("[2, 6] cap (6/5, 39/20]"));
    assert!(rep.violations.iter().any(|v| v.code == "h1_lambda"));
    assert!(rep.violations.iter().any(|v| v.code == "h1_p"));
}

#[test]
fn delta_tau_examples() {
    let s = |k, m| SymmetrySpec::new(k, m, (0, 1)).unwrap();
    assert_eq!(delta_tau(&s(2, 1)).unwrap(), 1.0);
    assert_eq!(delta_tau(&s(4, 1)).unwrap(), 0.7071067811865476);
    assert_eq!(delta_tau(&SymmetrySpec::trivial()).unwrap(), 1.0);
    assert!((delta_tau(&s(5, 2)).unwrap() - (std::f64::consts::PI / 5.0).sin()).abs() < 1e-16);
    let bad = SymmetrySpec { k: 0, m: 0, plane: (0, 1) };
    assert_eq!(delta_tau(&bad), Err(SymmetryError::ZeroOrder));
}

#[test]
fn two_dimensions_need_nonrigorous_flag() {
    let p = ProblemParams::with_exponents(2, 1.0, 2.0);
    assert!(validate(&p, None).violations.iter().any(|v| v.code == "dim"));
    let q = ProblemParams { nonrigorous: true, ..p };
    let rep = validate(&q, None);
    assert!(rep.admissible && rep.nonrigorous);
}

#[test]
fn h2_kappa_bound_uses_delta_tau() {
    let mut p = ProblemParams::reference();
    p.claims.h2 = true;
    p.kappa = 1.5;
    let k4 = SymmetrySpec::new(4, 1, (0, 1)).unwrap();
    assert!(validate(&p, Some(&k4)).violations.iter().any(|v| v.code == "h2_kappa"));
    let k2 = SymmetrySpec::new(2, 1, (0, 1)).unwrap();
    assert!(validate(&p, Some(&k2)).admissible);
}

proptest! {
    #[test]
    fn pr_inside_sobolev_range(n in 3usize..6, af in 0.01f64..0.99, pf in 0.01f64..0.99) {
        let nf = n as f64;
        let alpha = af * nf;
        let lo = 2.0 - alpha / nf;
        let hi = (2.0 * nf - alpha) / (nf - 2.0);
        let params = ProblemParams::with_exponents(n, alpha, lo + pf * (hi - lo));
        let set = lambda_set(&params);
        prop_assert!(set.r > 1.0 && set.r < 2.0);
        prop_assert!(set.pr > 2.0 && set.pr < 2.0 * nf / (nf - 2.0));
    }

    #[test]
    fn lambda_membership_matches_oracle(af in 0.05f64..0.95, p in 2.0f64..4.5, x in 1.5f64..7.0) {
        let alpha = 3.0 * af;
        let set = lambda_set(&ProblemParams::with_exponents(3, alpha, p));
        let inside = set.intersection.map_or(false, |iv| iv.contains(x));
        let ivs = oracle_intervals(3.0, alpha, p);
        // stay away from endpoints where float tolerance decides
        let near = ivs.iter().any(|(lo, _, hi, _)| (x - lo).abs() < 1e-9 || (x - hi).abs() < 1e-9);
        prop_assume!(!near);
        prop_assert_eq!(inside, oracle_contains(&ivs, x));
    }

    #[test]
    fn shrinking_a_constituent_shrinks_lambda(af in 0.05f64..0.95, p in 2.0f64..3.0, q in 2.0f64..3.0, i in 0usize..4, x in 1.5f64..7.0) {
        let a = lambda_set(&ProblemParams::with_exponents(3, 3.0 * af, p));
        let b = lambda_set(&ProblemParams::with_exponents(3, 3.0 * af, q));
        let fold = |ivs: &[Interval]| ivs[1..].iter().fold(ivs[0], |acc, iv| acc.intersect(iv));
        let mut shrunk = a.intervals.clone();
        shrunk[i] = shrunk[i].intersect(&b.intervals[i]);
        if fold(&shrunk).contains(x) {
            prop_assert!(fold(&a.intervals).contains(x));
        }
    }

    #[test]
    fn delta_tau_nonincreasing(k in 2usize..64) {
        let a = delta_tau(&SymmetrySpec::new(k, 1, (0, 1)).unwrap()).unwrap();
        let b = delta_tau(&SymmetrySpec::new(k + 1, 1, (0, 1)).unwrap()).unwrap();
        prop_assert!(b <= a && a <= 1.0 && b > 0.0);
    }
}
