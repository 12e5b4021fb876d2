//! The functional `J_{A,V}(u) = ½‖u‖²_{A,V} − D(u)/(2p)`, its gradient and the Nehari projection.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::field::{inner_av_with, ComplexField, FieldError, Grid, PotentialPair, Spectral};
use crate::nonlocal::{abs_pow, twisted_power, NonlocalError, RieszKernel};
use crate::params::ProblemParams;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Nonlocal(#[from] NonlocalError),
    #[error("context mismatch: {0}")]
    Context(String),
    #[error("degenerate field: {0}")]
    Degenerate(String),
}

/// `max_{t≥0} J(tu) = ((p−1)/2p)·(‖u‖²/D^{1/p})^{p/(p−1)}`.
pub fn mp_closed_form(norm2: f64, d: f64, p: f64) -> f64 {
    (p - 1.0) / (2.0 * p) * (norm2 / d.powf(1.0 / p)).powf(p / (p - 1.0))
}

/// `t_u = (‖u‖²/D)^{1/(2p−2)}`.
pub fn nehari_t(norm2: f64, d: f64, p: f64) -> f64 {
    (norm2 / d).powf(1.0 / (2.0 * p - 2.0))
}

/// `J(tu) = (t²/2)‖u‖² − (t^{2p}/2p)·D`.
pub fn j_scaled(norm2: f64, d: f64, p: f64, t: f64) -> f64 {
    0.5 * t * t * norm2 - t.powf(2.0 * p) / (2.0 * p) * d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Energies {
    pub norm2: f64,
    pub d: f64,
    pub j: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Residuals {
    /// `|‖u‖² − D(u)|/‖u‖²`.
    pub nehari: f64,
    /// `‖grad_J‖_σ/‖u‖_σ`.
    pub grad_sigma: f64,
    /// `‖J′(u)‖_{L²}/‖u‖_{L²}` with the strong-form representative.
    pub strong_l2: f64,
}

/// Everything `J` needs on one grid, plus the `(−Δ + σ)` preconditioner.
pub struct EnergyContext {
    pub params: ProblemParams,
    pub pot: PotentialPair,
    pub kernel: RieszKernel,
    pub sigma: f64,
    spectral: Spectral,
}

impl EnergyContext {
    /// Preconditioner shift `σ = V∞`.
    pub fn new(params: ProblemParams, pot: PotentialPair, kernel: RieszKernel) -> Result<Self, EnergyError> {
        let g = pot.grid();
        if kernel.grid() != g {
            return Err(EnergyError::Context("kernel and potentials live on different grids".into()));
        }
        if params.dim != g.dim {
            return Err(EnergyError::Context(format!("params dim {} vs grid dim {}", params.dim, g.dim)));
        }
        if (params.alpha - kernel.alpha()).abs() > 0.0 {
            return Err(EnergyError::Context(format!("params alpha {} vs kernel alpha {}", params.alpha, kernel.alpha())));
        }
        let sigma = pot.v_inf();
        Ok(Self { params, pot, kernel, sigma, spectral: Spectral::new(g) })
    }

    pub fn grid(&self) -> Grid {
        self.pot.grid()
    }

    pub fn p(&self) -> f64 {
        self.params.p
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    fn check(&self, u: &ComplexField) -> Result<(), EnergyError> {
        Ok(u.check_grid(&self.grid())?)
    }

    pub fn norm2(&self, u: &ComplexField) -> Result<f64, EnergyError> {
        self.check(u)?;
        Ok(inner_av_with(&self.spectral, &u.values, &u.values, &self.pot))
    }

    pub fn inner(&self, u: &ComplexField, v: &ComplexField) -> Result<f64, EnergyError> {
        self.check(u)?;
        self.check(v)?;
        Ok(inner_av_with(&self.spectral, &u.values, &v.values, &self.pot))
    }

    pub fn d(&self, u: &ComplexField) -> Result<f64, EnergyError> {
        self.check(u)?;
        Ok(crate::nonlocal::d_value(u, self.p(), &self.kernel)?)
    }

    pub fn evaluate(&self, u: &ComplexField) -> Result<Energies, EnergyError> {
        let norm2 = self.norm2(u)?;
        let d = self.d(u)?;
        Ok(Energies { norm2, d, j: 0.5 * norm2 - d / (2.0 * self.p()) })
    }

    pub fn j(&self, u: &ComplexField) -> Result<f64, EnergyError> {
        Ok(self.evaluate(u)?.j)
    }

    /// Energies together with the `L²` representative `r` of `J′(u)`:
    /// `r = Σ_a(−D_a F_a − iA_a F_a) + Vu − (K∗|u|^p)|u|^{p−2}u`, `F_a = D_a u + iA_a u`.
    pub fn evaluate_with_residual(&self, u: &ComplexField) -> Result<(Energies, Vec<Complex64>), EnergyError> {
        self.check(u)?;
        let g = self.grid();
        let dv = g.cell_volume();
        let p = self.p();
        let a = self.pot.a();
        let f = self.spectral.covariant_gradient(&u.values, a);
        let mut norm2 = 0.0;
        for i in 0..u.values.len() {
            for comp in &f {
                norm2 += comp[i].norm_sqr();
            }
            norm2 += self.pot.v()[i] * u.values[i].norm_sqr();
        }
        norm2 *= dv;
        let div = self.spectral.divergence(&f);
        let pw = abs_pow(u, p);
        let conv = self.kernel.convolve(&pw)?;
        let mut d = 0.0;
        let mut r = vec![Complex64::new(0.0, 0.0); u.values.len()];
        for i in 0..u.values.len() {
            d += conv[i] * pw[i];
            let mut z = -div[i] + self.pot.v()[i] * u.values[i] - twisted_power(u.values[i], p) * conv[i];
            for (ax, comp) in a.iter().zip(&f) {
                z -= Complex64::new(0.0, ax[i]) * comp[i];
            }
            r[i] = z;
        }
        d *= dv;
        Ok((Energies { norm2, d, j: 0.5 * norm2 - d / (2.0 * p) }, r))
    }

    /// `J′(u)v = ⟨u, v⟩_{A,V} − Re Σ (K∗|u|^p)|u|^{p−2}u·conj(v)·h^d`.
    pub fn derivative(&self, u: &ComplexField, v: &ComplexField) -> Result<f64, EnergyError> {
        let uv = self.inner(u, v)?;
        let d1 = crate::nonlocal::d_prime_pairing(u, v, self.p(), &self.kernel)?;
        Ok(uv - d1 / (2.0 * self.p()))
    }

    /// Preconditioned gradient `g = (−Δ̃ + σ)^{-1} r`, so that `⟨g, v⟩_σ = J′(u)v`.
    pub fn gradient(&self, u: &ComplexField) -> Result<ComplexField, EnergyError> {
        let (_, r) = self.evaluate_with_residual(u)?;
        Ok(self.precondition(&r))
    }

    pub fn precondition(&self, r: &[Complex64]) -> ComplexField {
        ComplexField { grid: self.grid(), values: self.spectral.solve_shifted(r, self.sigma) }
    }

    /// `(−Δ̃ + σ) v`, so that `⟨u, v⟩_σ = Re Σ u · conj(M v) h^d`.
    pub fn apply_shifted(&self, v: &ComplexField) -> ComplexField {
        ComplexField { grid: v.grid, values: self.spectral.apply_shifted(&v.values, self.sigma) }
    }

    pub fn sigma_inner(&self, u: &ComplexField, v: &ComplexField) -> f64 {
        self.spectral.sigma_inner(&u.values, &v.values, self.sigma)
    }

    pub fn nehari_scale(&self, u: &ComplexField) -> Result<f64, EnergyError> {
        let e = self.evaluate(u)?;
        check_nondegenerate(&e)?;
        Ok(nehari_t(e.norm2, e.d, self.p()))
    }

    pub fn mountain_pass_value(&self, u: &ComplexField) -> Result<f64, EnergyError> {
        let e = self.evaluate(u)?;
        check_nondegenerate(&e)?;
        Ok(mp_closed_form(e.norm2, e.d, self.p()))
    }

    /// Nehari, preconditioned and strong-form residuals, recomputed from `u`.
    pub fn residuals(&self, u: &ComplexField) -> Result<Residuals, EnergyError> {
        let (e, r) = self.evaluate_with_residual(u)?;
        let dv = self.grid().cell_volume();
        let g = self.precondition(&r);
        let g2: f64 = r.iter().zip(&g.values).map(|(a, b)| (a * b.conj()).re).sum::<f64>() * dv;
        let u_sigma = self.sigma_inner(u, u);
        let r2: f64 = r.iter().map(|z| z.norm_sqr()).sum::<f64>() * dv;
        let u2 = u.l2_norm().powi(2);
        Ok(Residuals {
            nehari: if e.norm2 > 0.0 { (e.norm2 - e.d).abs() / e.norm2 } else { f64::NAN },
            grad_sigma: (g2.max(0.0) / u_sigma).sqrt(),
            strong_l2: (r2 / u2).sqrt(),
        })
    }
}

fn check_nondegenerate(e: &Energies) -> Result<(), EnergyError> {
    if !(e.norm2 > 0.0) {
        return Err(EnergyError::Degenerate("u = 0".into()));
    }
    if !(e.d > 0.0) {
        return Err(EnergyError::Degenerate("D(u) = 0".into()));
    }
    Ok(())
}

pub fn j(u: &ComplexField, ctx: &EnergyContext) -> Result<f64, EnergyError> {
    ctx.j(u)
}

pub fn grad_j(u: &ComplexField, ctx: &EnergyContext) -> Result<ComplexField, EnergyError> {
    ctx.gradient(u)
}

pub fn nehari_scale(u: &ComplexField, ctx: &EnergyContext) -> Result<f64, EnergyError> {
    ctx.nehari_scale(u)
}

pub fn mountain_pass_value(u: &ComplexField, ctx: &EnergyContext) -> Result<f64, EnergyError> {
    ctx.mountain_pass_value(u)
}
