//! Cyclic rotation groups acting by `(u_g)(x) = τ(g)·u(g⁻¹x)` with `τ(ζ) = ζ^m`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{ComplexField, Grid, PotentialPair};

#[derive(Debug, Error, PartialEq)]
pub enum SymmetryError {
    #[error("group order k must be >= 1")]
    ZeroOrder,
    #[error("homomorphism index m = {m} must satisfy 0 <= m < k = {k}")]
    IndexRange { m: usize, k: usize },
    #[error("rotation plane {0:?} must name two distinct axes")]
    Plane((usize, usize)),
    #[error("rotation plane {plane:?} outside grid dimension {dim}")]
    PlaneDim { plane: (usize, usize), dim: usize },
    #[error("group element {j} out of range for k = {k}")]
    ElementRange { j: usize, k: usize },
    #[error("degenerate loop: min |u| on the circle is {min_modulus:e} (max |u| = {max_modulus:e})")]
    DegenerateLoop { min_modulus: f64, max_modulus: f64 },
    #[error("winding sum {0} is not within 0.25 of an integer")]
    Ambiguous(f64),
    #[error("circle of radius {radius} leaves the box of half extent {half_extent}")]
    Radius { radius: f64, half_extent: f64 },
}

/// `k`, `m` and the ordered rotation plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetrySpec {
    pub k: usize,
    pub m: usize,
    pub plane: (usize, usize),
}

impl SymmetrySpec {
    pub fn new(k: usize, m: usize, plane: (usize, usize)) -> Result<Self, SymmetryError> {
        let s = Self { k, m, plane };
        s.check()?;
        Ok(s)
    }

    pub fn trivial() -> Self {
        Self { k: 1, m: 0, plane: (0, 1) }
    }

    pub fn check(&self) -> Result<(), SymmetryError> {
        if self.k == 0 {
            return Err(SymmetryError::ZeroOrder);
        }
        if self.m >= self.k {
            return Err(SymmetryError::IndexRange { m: self.m, k: self.k });
        }
        if self.plane.0 == self.plane.1 {
            return Err(SymmetryError::Plane(self.plane));
        }
        Ok(())
    }

    fn check_grid(&self, g: &Grid) -> Result<(), SymmetryError> {
        self.check()?;
        if self.plane.0 >= g.dim || self.plane.1 >= g.dim {
            return Err(SymmetryError::PlaneDim { plane: self.plane, dim: g.dim });
        }
        Ok(())
    }

    /// Rotations by multiples of `2π/k` map the lattice to itself.
    pub fn is_lattice_exact(&self) -> bool {
        matches!(self.k, 1 | 2 | 4)
    }

    /// `τ(g_j) = e^{2πi·jm/k}`, exact for quarter-turn phases.
    pub fn tau(&self, j: usize) -> Complex64 {
        root_of_unity((j * self.m) % self.k, self.k)
    }

    /// Quarter-turn count of `g_j` when it is a multiple of `π/2`.
    fn quarter_turns(&self, j: usize) -> Option<usize> {
        let j = j % self.k;
        if (4 * j) % self.k == 0 {
            Some((4 * j / self.k) % 4)
        } else {
            None
        }
    }

    /// `g_j x`: rotation by `2πj/k` in the plane; exact for quarter turns.
    pub fn rotate_point(&self, j: usize, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
        let (a, b) = self.plane;
        let (xa, xb) = (x[a], x[b]);
        let (na, nb) = match self.quarter_turns(j) {
            Some(0) => (xa, xb),
            Some(1) => (-xb, xa),
            Some(2) => (-xa, -xb),
            Some(3) => (xb, -xa),
            _ => {
                let t = 2.0 * PI * (j % self.k) as f64 / self.k as f64;
                let (s, c) = t.sin_cos();
                (c * xa - s * xb, s * xa + c * xb)
            }
        };
        out[a] = na;
        out[b] = nb;
    }

    /// Index of `g_j^{-1}` in `0..k`.
    pub fn inverse(&self, j: usize) -> usize {
        (self.k - j % self.k) % self.k
    }
}

fn root_of_unity(q: usize, k: usize) -> Complex64 {
    if (4 * q) % k == 0 {
        match (4 * q / k) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        Complex64::from_polar(1.0, 2.0 * PI * q as f64 / k as f64)
    }
}

/// Lattice index map of a quarter-turn rotation by `t` steps; index 0 wraps to itself.
fn rotate_index(idx: &mut [usize], plane: (usize, usize), t: usize, n: usize) {
    let neg = |i: usize| (n - i) % n;
    let (ia, ib) = (idx[plane.0], idx[plane.1]);
    let (ra, rb) = match t % 4 {
        0 => (ia, ib),
        1 => (neg(ib), ia),
        2 => (neg(ia), neg(ib)),
        _ => (ib, neg(ia)),
    };
    idx[plane.0] = ra;
    idx[plane.1] = rb;
}

/// `(u_g)(x) = τ(g)·u(g⁻¹x)` for `g = g_j`.
pub fn act(u: &ComplexField, j: usize, spec: &SymmetrySpec) -> Result<ComplexField, SymmetryError> {
    spec.check_grid(&u.grid)?;
    if j >= spec.k {
        return Err(SymmetryError::ElementRange { j, k: spec.k });
    }
    let g = u.grid;
    let tau = spec.tau(j);
    let inv = spec.inverse(j);
    let mut out = ComplexField::zeros(g);
    match spec.quarter_turns(inv) {
        Some(t) => {
            let mut idx = vec![0usize; g.dim];
            for i in 0..g.len() {
                for (a, v) in idx.iter_mut().enumerate() {
                    *v = g.axis_index(i, a);
                }
                rotate_index(&mut idx, spec.plane, t, g.n);
                out.values[i] = mul_exact(tau, u.values[g.flat(&idx)]);
            }
        }
        None => {
            let mut x = vec![0.0; g.dim];
            let mut y = vec![0.0; g.dim];
            for i in 0..g.len() {
                g.point(i, &mut x);
                spec.rotate_point(inv, &x, &mut y);
                out.values[i] = tau * u.interpolate(&y);
            }
        }
    }
    Ok(out)
}

/// Multiplication by a quarter root of unity without rounding.
fn mul_exact(tau: Complex64, z: Complex64) -> Complex64 {
    if tau.im == 0.0 && tau.re.abs() == 1.0 {
        if tau.re > 0.0 {
            z
        } else {
            -z
        }
    } else if tau.re == 0.0 && tau.im.abs() == 1.0 {
        if tau.im > 0.0 {
            Complex64::new(-z.im, z.re)
        } else {
            Complex64::new(z.im, -z.re)
        }
    } else {
        tau * z
    }
}

/// Averaging projector `(1/k)·Σ_j u_{g_j}` onto τ-equivariant fields.
pub fn symmetrize(u: &ComplexField, spec: &SymmetrySpec) -> Result<ComplexField, SymmetryError> {
    let parts = (0..spec.k).map(|j| act(u, j, spec)).collect::<Result<Vec<_>, _>>()?;
    let mut sum = pairwise_sum(&parts);
    let s = 1.0 / spec.k as f64;
    sum.values.iter_mut().for_each(|z| *z *= s);
    Ok(sum)
}

fn pairwise_sum(parts: &[ComplexField]) -> ComplexField {
    if parts.len() == 1 {
        return parts[0].clone();
    }
    let mid = parts.len() / 2;
    pairwise_sum(&parts[..mid]).add(&pairwise_sum(&parts[mid..]))
}

/// `max_j max_x |u_{g_j}(x) − u(x)| / max |u|`; zero for exactly equivariant fields.
pub fn equivariance_defect(u: &ComplexField, spec: &SymmetrySpec) -> Result<f64, SymmetryError> {
    let scale = u.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for j in 1..spec.k {
        worst = worst.max(act(u, j, spec)?.max_diff(u));
    }
    Ok(worst / scale)
}

/// Discrete degree of `arg u` along the circle of the given radius in the rotation plane.
pub fn winding_number(u: &ComplexField, radius: f64, spec: &SymmetrySpec) -> Result<i64, SymmetryError> {
    spec.check_grid(&u.grid)?;
    let g = u.grid;
    if !(radius > 0.0 && radius < g.half_extent - g.h()) {
        return Err(SymmetryError::Radius { radius, half_extent: g.half_extent });
    }
    let samples = 256;
    let mut x = vec![0.0; g.dim];
    let vals: Vec<Complex64> = (0..samples)
        .map(|s| {
            let t = 2.0 * PI * s as f64 / samples as f64;
            x[spec.plane.0] = radius * t.cos();
            x[spec.plane.1] = radius * t.sin();
            u.interpolate(&x)
        })
        .collect();
    let max_modulus = u.max_abs();
    let min_modulus = vals.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if !(min_modulus >= 1e-8 * max_modulus) || max_modulus == 0.0 {
        return Err(SymmetryError::DegenerateLoop { min_modulus, max_modulus });
    }
    let total: f64 = (0..samples).map(|s| (vals[(s + 1) % samples] / vals[s]).arg()).sum();
    let w = total / (2.0 * PI);
    let r = w.round();
    if (w - r).abs() > 0.25 {
        return Err(SymmetryError::Ambiguous(w));
    }
    Ok(r as i64)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatReport {
    pub max_v_violation: f64,
    pub max_a_violation: f64,
    pub worst_node: Option<Vec<f64>>,
    pub worst_element: usize,
    pub tolerance: f64,
    pub lattice_exact: bool,
    pub analytic: bool,
    pub compatible: bool,
}

/// Max violation of `V(gx) = V(x)` and `A(gx) = gA(x)` over all group elements.
pub fn compat_check(pot: &PotentialPair, spec: &SymmetrySpec) -> Result<CompatReport, SymmetryError> {
    let g = pot.grid();
    spec.check_grid(&g)?;
    let lattice = spec.is_lattice_exact();
    let tolerance = if lattice { 1e-8 } else { 1e-5 };
    let mut worst = (0.0f64, 0.0f64, None, 0usize);
    let mut x = vec![0.0; g.dim];
    let mut y = vec![0.0; g.dim];
    let mut ax = vec![0.0; g.dim];
    let mut gax = vec![0.0; g.dim];
    let mut ay = vec![0.0; g.dim];
    let mut idx = vec![0usize; g.dim];
    let analytic = !lattice && pot.source().is_some();
    let v_field = ComplexField { grid: g, values: pot.v().iter().map(|&v| Complex64::new(v, 0.0)).collect() };
    let a_fields: Vec<ComplexField> = pot.a().iter().map(|c| ComplexField { grid: g, values: c.iter().map(|&v| Complex64::new(v, 0.0)).collect() }).collect();
    for j in 1..spec.k {
        for i in 0..g.len() {
            for (a, v) in idx.iter_mut().enumerate() {
                *v = g.axis_index(i, a);
            }
            // index-0 planes hold boundary averages; only lattice maps see them consistently
            if !lattice && idx.iter().any(|&v| v == 0) {
                continue;
            }
            g.point(i, &mut x);
            for a in 0..g.dim {
                ax[a] = pot.a()[a][i];
            }
            spec.rotate_point(j, &ax, &mut gax);
            let (vy, ok) = if lattice {
                rotate_index(&mut idx, spec.plane, spec.quarter_turns(j).unwrap_or(0), g.n);
                let k = g.flat(&idx);
                for a in 0..g.dim {
                    ay[a] = pot.a()[a][k];
                }
                (pot.v()[k], true)
            } else {
                spec.rotate_point(j, &x, &mut y);
                if let Some((vec_p, sc_p)) = pot.source().filter(|_| analytic) {
                    vec_p.eval(&y, &mut ay);
                    (sc_p.eval(&y), true)
                } else {
                    let inside = y.iter().all(|c| c.abs() < g.half_extent - g.h());
                    for a in 0..g.dim {
                        ay[a] = a_fields[a].interpolate(&y).re;
                    }
                    (v_field.interpolate(&y).re, inside)
                }
            };
            if !ok {
                continue;
            }
            let dv = (vy - pot.v()[i]).abs();
            let da = (0..g.dim).map(|a| (ay[a] - gax[a]).abs()).fold(0.0, f64::max);
            if dv.max(da) > worst.0.max(worst.1) {
                worst.2 = Some(x.clone());
                worst.3 = j;
            }
            worst.0 = worst.0.max(dv);
            worst.1 = worst.1.max(da);
        }
    }
    Ok(CompatReport {
        max_v_violation: worst.0,
        max_a_violation: worst.1,
        worst_node: worst.2,
        worst_element: worst.3,
        tolerance,
        lattice_exact: lattice,
        analytic,
        compatible: worst.0 < tolerance && worst.1 < tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_is_multiplicative() {
        for k in 1..9 {
            for m in 0..k {
                let s = SymmetrySpec::new(k, m, (0, 1)).unwrap();
                for a in 0..k {
                    for b in 0..k {
                        let lhs = s.tau((a + b) % k);
                        let rhs = s.tau(a) * s.tau(b);
                        assert!((lhs - rhs).norm() < 1e-14);
                        if s.is_lattice_exact() {
                            assert_eq!(lhs, rhs);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_specs() {
        assert_eq!(SymmetrySpec::new(0, 0, (0, 1)), Err(SymmetryError::ZeroOrder));
        assert!(SymmetrySpec::new(4, 4, (0, 1)).is_err());
        assert!(SymmetrySpec::new(4, 1, (1, 1)).is_err());
    }

    #[test]
    fn quarter_rotation_of_points_is_exact() {
        let s = SymmetrySpec::new(4, 1, (0, 1)).unwrap();
        let mut out = [0.0; 3];
        s.rotate_point(1, &[0.3, 0.7, 1.0], &mut out);
        assert_eq!(out, [-0.7, 0.3, 1.0]);
    }
}
