//! Epstein zeta function of the cubic lattice `ℤᵈ` and the Riesz kernel origin weights.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, gamma_ur};

use crate::quad::gauss_legendre;

/// `E_a(x) = x^{−a} Γ(a) Q(a, x)`, the upper incomplete gamma scaled by `x^{−a}`.
fn upper_scaled(a: f64, x: f64) -> f64 {
    x.powf(-a) * gamma(a) * gamma_ur(a, x)
}

/// `Z_d(s) = Σ'_{n∈ℤᵈ} |n|^{−s}`, analytically continued to `0 < s < d`.
///
/// Uses the theta-function splitting
/// `π^{−s/2}Γ(s/2) Z = Σ' [E_{s/2}(π|n|²) + E_{(d−s)/2}(π|n|²)] − 2/s − 2/(d−s)`.
pub fn lattice_zeta(d: usize, s: f64) -> f64 {
    assert!(s > 0.0 && s < d as f64, "zeta continuation needs 0 < s < d");
    let cut = 7i64;
    let mut sum = 0.0;
    let mut idx = vec![-cut; d];
    loop {
        let n2: i64 = idx.iter().map(|i| i * i).sum();
        if n2 > 0 && n2 <= cut * cut {
            let x = PI * n2 as f64;
            sum += upper_scaled(s / 2.0, x) + upper_scaled((d as f64 - s) / 2.0, x);
        }
        let mut a = 0;
        loop {
            if a == d {
                let lam = sum - 2.0 / s - 2.0 / (d as f64 - s);
                return lam * PI.powf(s / 2.0) / gamma(s / 2.0);
            }
            idx[a] += 1;
            if idx[a] <= cut {
                break;
            }
            idx[a] = -cut;
            a += 1;
        }
    }
}

/// Average of `|x|^{−α}` over the cube `[−h/2, h/2]^d`.
///
/// Splitting the cube into `2d` pyramids over its faces gives
/// `d·2^α h^{−α}/(d−α) · ∫_{[0,1]^{d−1}} (1 + |t|²)^{−α/2} dt`.
pub fn cube_cell_average(d: usize, alpha: f64, h: f64) -> f64 {
    let rule = gauss_legendre(48, 0.0, 1.0);
    let face = match d {
        1 => 1.0,
        2 => rule.iter().map(|&(t, w)| w * (1.0 + t * t).powf(-alpha / 2.0)).sum(),
        3 => {
            let mut s = 0.0;
            for &(t1, w1) in &rule {
                for &(t2, w2) in &rule {
                    s += w1 * w2 * (1.0 + t1 * t1 + t2 * t2).powf(-alpha / 2.0);
                }
            }
            s
        }
        _ => panic!("cube_cell_average supports d <= 3"),
    };
    d as f64 * 2f64.powf(alpha) * h.powf(-alpha) / (d as f64 - alpha) * face
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_3d_at_one() {
        assert!((lattice_zeta(3, 1.0) + 2.8372974794806196).abs() < 1e-11);
    }

    #[test]
    fn zeta_1d_matches_riemann() {
        // Z_1(s) = 2ζ(s); ζ(1/2) = −1.4603545088095868.
        assert!((lattice_zeta(1, 0.5) - 2.0 * -1.4603545088095868).abs() < 1e-11);
    }

    #[test]
    fn zeta_2d_at_half_dimension() {
        // Z_2(s) = 4ζ(s/2)β(s/2).
        assert!((lattice_zeta(2, 1.0) + 3.900264920001956).abs() < 1e-9);
    }

    #[test]
    fn cell_average_newton_cube() {
        assert!((cube_cell_average(3, 1.0, 1.0) - 2.38007736).abs() < 1e-7);
        // d = 1: (1/h)∫_{−h/2}^{h/2}|x|^{−α} = 2^α h^{−α}/(1−α).
        assert!((cube_cell_average(1, 0.5, 2.0) - 2.0).abs() < 1e-12);
    }
}
