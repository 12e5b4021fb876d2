//! Quadrature helpers over `gauss-quad`.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use statrs::function::gamma::gamma;

/// Gauss-Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre(deg: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(deg).expect("Gauss-Legendre degree >= 2");
    let (c, s) = (0.5 * (a + b), 0.5 * (b - a));
    let mut out: Vec<(f64, f64)> = rule.as_node_weight_pairs().iter().map(|&(x, w)| (c + s * x, s * w)).collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// Composite Gauss-Legendre on panels graded geometrically toward `a`.
///
/// Panels are `[a + (b−a)ρ^{j+1}, a + (b−a)ρ^j]` for `j < levels`, plus `[a, a + (b−a)ρ^levels]`.
/// Integrable singularities `|s − a|^{−β}` converge geometrically in `levels`.
pub fn graded(f: impl Fn(f64) -> f64, a: f64, b: f64, ratio: f64, levels: usize, deg: usize) -> f64 {
    if b == a {
        return 0.0;
    }
    let rule = gauss_legendre(deg, -1.0, 1.0);
    let panel = |lo: f64, hi: f64| -> f64 {
        let (c, s) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        rule.iter().map(|&(x, w)| w * f(c + s * x)).sum::<f64>() * s
    };
    let len = b - a;
    let mut total = 0.0;
    let mut hi = 1.0;
    for _ in 0..levels {
        let lo = hi * ratio;
        total += panel(a + len * lo, a + len * hi);
        hi = lo;
    }
    total + panel(a, a + len * hi)
}

/// Surface area of the unit sphere `S^{N−1}` in `ℝᴺ`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0),
    }
}

/// Spherical average of `f(y + r·e)` over unit vectors `e ∈ S^{dim−1}`, `dim ∈ {2, 3}`.
pub struct SphereRule {
    dim: usize,
    dirs: Vec<([f64; 3], f64)>,
}

impl SphereRule {
    /// Product Gauss-Legendre (in `cos θ`) × trapezoid (in `φ`) for `dim = 3`; trapezoid for `dim = 2`.
    pub fn new(dim: usize, n_polar: usize, n_azimuth: usize) -> Self {
        assert!(dim == 2 || dim == 3, "sphere rule supports dim 2 or 3");
        let mut dirs = Vec::new();
        if dim == 2 {
            for j in 0..n_azimuth {
                let t = 2.0 * PI * (j as f64 + 0.5) / n_azimuth as f64;
                dirs.push(([t.cos(), t.sin(), 0.0], 1.0 / n_azimuth as f64));
            }
        } else {
            for (c, w) in gauss_legendre(n_polar, -1.0, 1.0) {
                let s = (1.0 - c * c).max(0.0).sqrt();
                for j in 0..n_azimuth {
                    let t = 2.0 * PI * (j as f64 + 0.5) / n_azimuth as f64;
                    dirs.push(([s * t.cos(), s * t.sin(), c], 0.5 * w / n_azimuth as f64));
                }
            }
        }
        Self { dim, dirs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn directions(&self) -> &[([f64; 3], f64)] {
        &self.dirs
    }

    pub fn average(&self, y: &[f64], r: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut x = [0.0; 3];
        let mut s = 0.0;
        for (e, w) in &self.dirs {
            for a in 0..self.dim {
                x[a] = y[a] + r * e[a];
            }
            s += w * f(&x[..self.dim]);
        }
        s
    }
}
