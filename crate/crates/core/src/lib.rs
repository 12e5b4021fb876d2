//! Numerical toolkit for the magnetic Choquard equation
//!
//! `-(∇ + iA)²u + V u = (|x|^{-α} ∗ |u|^p)|u|^{p-2}u` in `ℝᴺ`,
//!
//! with τ-equivariant solutions computed on truncated Cartesian grids, ground
//! states of the nonmagnetic limit problem computed on a radial mesh, and
//! numeric checks of the decay, cut-off and multi-bump threshold estimates.

pub mod analysis;
pub mod energy;
pub mod epstein;
pub mod fft;
pub mod field;
pub mod fit;
pub mod multibump;
pub mod nonlocal;
pub mod params;
pub mod quad;
pub mod radial;
pub mod snapshot;
pub mod solver;
pub mod symmetry;

pub use num_complex::Complex64;

/// Formats a float with 17 significant digits, the round-trip precision of `f64`.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}
