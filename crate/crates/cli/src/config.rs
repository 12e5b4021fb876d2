//! Strict TOML run configuration.

use std::path::PathBuf;

use choquard::energy::EnergyContext;
use choquard::field::{Grid, PotentialPair, ScalarPotential, VectorPotential};
use choquard::nonlocal::{OriginRule, RieszKernel};
use choquard::params::{HypothesisClaims, ProblemParams};
use choquard::radial::{GroundStateConfig, RadialMesh};
use choquard::solver::SolveConfig;
use choquard::symmetry::SymmetrySpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MIN_RADIAL_NODES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Workflow {
    Validate,
    Ground,
    Solve,
    Bumps,
    Decay,
}

impl Workflow {
    pub fn name(self) -> &'static str {
        match self {
            Workflow::Validate => "validate",
            Workflow::Ground => "ground",
            Workflow::Solve => "solve",
            Workflow::Bumps => "bumps",
            Workflow::Decay => "decay",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub dim: usize,
    pub alpha: f64,
    pub p: f64,
    /// `λ` for the limit problem, `V∞` for the magnetic one.
    #[serde(default = "one")]
    pub v_inf: f64,
    #[serde(default = "half")]
    pub kappa: f64,
    #[serde(default = "half")]
    pub c0: f64,
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default = "tenth")]
    pub epsilon_cutoff: f64,
    #[serde(default)]
    pub h1: bool,
    #[serde(default)]
    pub h2: bool,
    #[serde(default)]
    pub nonrigorous: bool,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn tenth() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub half_extent: f64,
    pub n: usize,
    #[serde(default)]
    pub origin_rule: OriginRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    #[serde(default = "zero_field")]
    pub vector: VectorPotential,
    /// Defaults to the constant `V∞` of the problem block.
    #[serde(default)]
    pub scalar: Option<ScalarPotential>,
}

fn zero_field() -> VectorPotential {
    VectorPotential::Zero
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadialBlock {
    pub r_max: f64,
    pub m_nodes: usize,
    /// Defaults to `[v_inf]`.
    pub lambdas: Option<Vec<f64>>,
    pub max_iter: usize,
    pub tol_grad: f64,
}

impl Default for RadialBlock {
    fn default() -> Self {
        let g = GroundStateConfig::default();
        Self { r_max: 30.0, m_nodes: 3000, lambdas: None, max_iter: g.max_iter, tol_grad: g.tol_grad }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BumpsBlock {
    pub rho0: Vec<f64>,
}

impl Default for BumpsBlock {
    fn default() -> Self {
        Self { rho0: vec![16.0, 18.0, 20.0, 22.0, 24.0, 26.0, 28.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// When set, only this subcommand (and `validate`) may run the file.
    #[serde(default)]
    pub workflow: Option<Workflow>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Authoritative seed; copied into the solver block.
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub symmetry: Option<SymmetrySpec>,
    #[serde(default)]
    pub potential: Option<PotentialBlock>,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub radial: RadialBlock,
    #[serde(default)]
    pub bumps: BumpsBlock,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.solver.seed = cfg.seed;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn with_overrides(mut self, seed: Option<u64>, nonrigorous: bool) -> Self {
        if let Some(s) = seed {
            self.seed = s;
            self.solver.seed = s;
        }
        self.problem.nonrigorous |= nonrigorous;
        self
    }

    /// Structural checks that must pass before any compute.
    pub fn check(&self) -> Result<(), CliError> {
        let r = &self.radial;
        if r.m_nodes < MIN_RADIAL_NODES {
            return Err(config_err(format!("radial.m_nodes = {} is below the minimum {MIN_RADIAL_NODES}", r.m_nodes)));
        }
        if !(r.r_max > 0.0 && r.r_max.is_finite()) {
            return Err(config_err(format!("radial.r_max must be positive, got {}", r.r_max)));
        }
        if let Some(ls) = &r.lambdas {
            if ls.is_empty() || ls.iter().any(|l| !(*l > 0.0)) {
                return Err(config_err("radial.lambdas must be a nonempty list of positive values"));
            }
        }
        if let Some(s) = &self.symmetry {
            s.check().map_err(|e| config_err(e.to_string()))?;
        }
        if let Some(g) = &self.grid {
            Grid::new(self.problem.dim, g.half_extent, g.n).map_err(|e| config_err(e.to_string()))?;
        }
        if let Some(scalar) = self.potential.as_ref().and_then(|p| p.scalar.as_ref()) {
            if scalar.v_inf() != self.problem.v_inf {
                return Err(config_err(format!("potential V_inf {} differs from problem.v_inf {}", scalar.v_inf(), self.problem.v_inf)));
            }
            if let ScalarPotential::ExpApproach { c0, kappa, .. } = scalar {
                if *c0 != self.problem.c0 || *kappa != self.problem.kappa {
                    return Err(config_err("exp_approach c0 and kappa must match the problem block"));
                }
            }
        }
        if self.bumps.rho0.is_empty() {
            return Err(config_err("bumps.rho0 must not be empty"));
        }
        self.solver.check().map_err(|e| config_err(e.to_string()))
    }

    pub fn params(&self) -> ProblemParams {
        let b = &self.problem;
        ProblemParams {
            dim: b.dim,
            alpha: b.alpha,
            p: b.p,
            v_inf: b.v_inf,
            kappa: b.kappa,
            c0: b.c0,
            rho: b.rho,
            epsilon_cutoff: b.epsilon_cutoff,
            claims: HypothesisClaims { h1: b.h1, h2: b.h2 },
            nonrigorous: b.nonrigorous,
        }
    }

    pub fn spec(&self) -> SymmetrySpec {
        self.symmetry.unwrap_or_else(SymmetrySpec::trivial)
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = self.grid.as_ref().ok_or_else(|| config_err("this workflow needs a [grid] block"))?;
        Grid::new(self.problem.dim, g.half_extent, g.n).map_err(|e| config_err(e.to_string()))
    }

    pub fn scalar(&self) -> ScalarPotential {
        self.potential.as_ref().and_then(|p| p.scalar.clone()).unwrap_or(ScalarPotential::Constant { v_inf: self.problem.v_inf })
    }

    pub fn vector(&self) -> VectorPotential {
        self.potential.as_ref().map_or(VectorPotential::Zero, |p| p.vector.clone())
    }

    pub fn potentials(&self) -> Result<PotentialPair, CliError> {
        PotentialPair::sample(self.grid()?, &self.vector(), &self.scalar()).map_err(|e| config_err(e.to_string()))
    }

    pub fn context(&self) -> Result<EnergyContext, CliError> {
        let grid = self.grid()?;
        let rule = self.grid.as_ref().map(|g| g.origin_rule).unwrap_or_default();
        let kernel = RieszKernel::new(grid, self.problem.alpha, rule).map_err(|e| config_err(e.to_string()))?;
        EnergyContext::new(self.params(), self.potentials()?, kernel).map_err(|e| config_err(e.to_string()))
    }

    pub fn mesh(&self) -> Result<RadialMesh, CliError> {
        RadialMesh::new(self.problem.dim, self.radial.r_max, self.radial.m_nodes).map_err(|e| config_err(e.to_string()))
    }

    pub fn ground_config(&self) -> GroundStateConfig {
        GroundStateConfig { max_iter: self.radial.max_iter, tol_grad: self.radial.tol_grad, ..Default::default() }
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.radial.lambdas.clone().unwrap_or_else(|| vec![self.problem.v_inf])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[problem]\ndim = 3\nalpha = 1.0\np = 2.0\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.params(), ProblemParams::reference());
        assert_eq!(c.spec(), SymmetrySpec::trivial());
        assert_eq!(c.lambdas(), vec![1.0]);
    }

    #[test]
    fn unknown_keys_rejected() {
        for extra in ["\nbogus = 1\n", "\n[grid]\nhalf_extent = 4.0\nn = 8\nspacing = 1.0\n", "\n[solver]\ntol = 1.0\n"] {
            let err = RunConfig::parse(&format!("{MINIMAL}{extra}")).unwrap_err();
            assert!(matches!(err, CliError::Config(_)), "{extra}");
        }
    }

    #[test]
    fn presets_parse_and_round_trip() {
        let text = format!(
            "{MINIMAL}\n[grid]\nhalf_extent = 8.0\nn = 16\n\n[symmetry]\nk = 4\nm = 1\nplane = [0, 1]\n\n\
             [potential]\nvector = {{ preset = \"constant_field\", strength = 0.1, plane = [0, 1] }}\n\
             scalar = {{ preset = \"well\", v_inf = 1.0, depth = 0.5, width = 2.0 }}\n"
        );
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.spec().k, 4);
        let again = RunConfig::parse(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn small_mesh_and_mismatched_v_inf_rejected() {
        let err = RunConfig::parse(&format!("{MINIMAL}\n[radial]\nm_nodes = 8\n")).unwrap_err();
        assert!(err.to_string().contains("m_nodes"));
        let text = format!("{MINIMAL}\n[potential]\nscalar = {{ preset = \"constant\", v_inf = 2.0 }}\n");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn overrides_apply_to_solver_seed() {
        let c = RunConfig::parse(MINIMAL).unwrap().with_overrides(Some(9), true);
        assert_eq!((c.seed, c.solver.seed), (9, 9));
        assert!(c.params().nonrigorous);
    }
}
