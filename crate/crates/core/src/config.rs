//! TOML run configuration.
//!
//! Every section is optional; missing keys take the defaults below. Unknown
//! keys are rejected so typos fail loudly.
//!
//! ```toml
//! seed = 20240601
//!
//! [problem]
//! dim = 4
//! alpha = 0.1
//! beta = 0.2
//!
//! [barrier]
//! lambda0_factor = 1.5   # λ₀ = factor · λ*(1)
//! l0 = 1.5
//! delta_factor = 0.9     # δ = factor · s*(λ₀)
//! w_resolution = 1025
//!
//! [domain]
//! r_cyl = 0.5
//! l_margin = 1.0         # l_total = l₁ + margin
//! fillet_length = 0.2
//! cert_samples = 10000
//! cert_grid_h = 0.01
//!
//! [mesh]
//! h = 0.04
//!
//! [sweep]
//! steps = 12
//!
//! [solver]
//! merit = "energy"
//! epsilon_schedule = [1e-4, 1e-6, 1e-8, 1e-10]
//! multistart_count = 8
//!
//! [analysis]
//! tau_rel = 0.05
//! tau_abs_factor = 1e-6
//! eta = 0.05
//! min_run_edges = 2
//! tol_factor = 10.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::ProblemParams;
use crate::solver::SolveConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            dim: 4,
            alpha: 0.1,
            beta: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierConfig {
    pub lambda0_factor: f64,
    pub l0: f64,
    pub delta_factor: f64,
    /// Samples of the exported w profile.
    pub w_resolution: usize,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self {
            lambda0_factor: 1.5,
            l0: 1.5,
            delta_factor: 0.9,
            w_resolution: 1025,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub r_cyl: f64,
    pub l_margin: f64,
    pub fillet_length: f64,
    pub cert_samples: usize,
    pub cert_grid_h: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            r_cyl: 0.5,
            l_margin: 1.0,
            fillet_length: 0.2,
            cert_samples: 10_000,
            cert_grid_h: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub h: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { h: 0.04 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub steps: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { steps: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub tau_rel: f64,
    /// τ_abs as a fraction of the largest flux over the whole sweep.
    pub tau_abs_factor: f64,
    pub eta: f64,
    pub min_run_edges: usize,
    /// Support and comparison tolerance is `tol_factor · h² · max u`.
    pub tol_factor: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            tau_rel: 0.05,
            tau_abs_factor: 1e-6,
            eta: 0.05,
            min_run_edges: 2,
            tol_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides `solver.prng_seed` when set.
    pub seed: Option<u64>,
    /// Solve on the unit ball instead of the dumbbell.
    pub ball_only: bool,
    pub problem: ProblemConfig,
    pub barrier: BarrierConfig,
    pub domain: DomainConfig,
    pub mesh: MeshConfig,
    pub sweep: SweepConfig,
    pub solver: SolveConfig,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            ball_only: false,
            problem: ProblemConfig::default(),
            barrier: BarrierConfig::default(),
            domain: DomainConfig::default(),
            mesh: MeshConfig::default(),
            sweep: SweepConfig::default(),
            solver: SolveConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Fails only for seeds above `i64::MAX`, which TOML integers cannot hold;
    /// `validate` rejects those.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Problem parameters at `λ = 1`.
    pub fn problem_params(&self) -> Result<ProblemParams> {
        ProblemParams::new(self.problem.dim, self.problem.alpha, self.problem.beta, 1.0)
    }

    /// Solver settings with the top-level seed applied.
    pub fn solve_config(&self) -> SolveConfig {
        let mut s = self.solver.clone();
        if let Some(seed) = self.seed {
            s.prng_seed = seed;
        }
        s
    }

    /// Checks every precondition that can be checked without computing.
    pub fn validate(&self) -> Result<()> {
        self.problem_params()?;
        let seed = self.solve_config().prng_seed;
        if seed > i64::MAX as u64 {
            return Err(Error::InvalidParameter(format!("seed must be at most {}, got {seed}", i64::MAX)));
        }
        let b = &self.barrier;
        if !(b.lambda0_factor.is_finite() && b.lambda0_factor > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda0_factor must exceed 1 so that λ₀ > λ*, got {}",
                b.lambda0_factor
            )));
        }
        if !(b.l0.is_finite() && b.l0 > 1.0) {
            return Err(Error::InvalidParameter(format!("l0 must exceed 1, got {}", b.l0)));
        }
        if !(b.delta_factor > 0.0 && b.delta_factor < 1.0) {
            return Err(Error::InvalidParameter(format!("delta_factor must lie in (0, 1), got {}", b.delta_factor)));
        }
        if b.w_resolution < 3 {
            return Err(Error::InvalidParameter("w_resolution must be at least 3".into()));
        }
        let d = &self.domain;
        if !(d.r_cyl > 0.0 && d.r_cyl <= 0.9) {
            return Err(Error::InvalidParameter(format!("r_cyl must lie in (0, 0.9], got {}", d.r_cyl)));
        }
        positive("l_margin", d.l_margin)?;
        positive("fillet_length", d.fillet_length)?;
        positive("cert_grid_h", d.cert_grid_h)?;
        if d.cert_samples < 16 {
            return Err(Error::InvalidParameter("cert_samples must be at least 16".into()));
        }
        positive("mesh.h", self.mesh.h)?;
        if self.mesh.h > 0.25 {
            return Err(Error::InvalidParameter(format!("mesh.h = {} is too coarse (max 0.25)", self.mesh.h)));
        }
        if self.sweep.steps == 0 {
            return Err(Error::InvalidParameter("sweep.steps must be at least 1".into()));
        }
        self.solver.validate()?;
        let a = &self.analysis;
        if !(a.tau_rel > 0.0 && a.tau_rel < 1.0) {
            return Err(Error::InvalidParameter(format!("tau_rel must lie in (0, 1), got {}", a.tau_rel)));
        }
        if !(a.tau_abs_factor >= 0.0 && a.tau_abs_factor < 1.0) {
            return Err(Error::InvalidParameter(format!("tau_abs_factor must lie in [0, 1), got {}", a.tau_abs_factor)));
        }
        if !(a.eta > 0.0 && a.eta < 0.5) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 0.5), got {}", a.eta)));
        }
        if a.min_run_edges == 0 {
            return Err(Error::InvalidParameter("min_run_edges must be at least 1".into()));
        }
        positive("tol_factor", a.tol_factor)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.seed = Some(7);
        c.mesh.h = 0.03;
        c.solver.multistart_count = 3;
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.solve_config().prng_seed, 7);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::from_toml("[mesh]\nhh = 1"), Err(Error::Config(_))));
        let c = RunConfig::from_toml("[problem]\nalpha = 0.3\nbeta = 0.2").unwrap();
        assert!(c.validate().unwrap_err().is_invalid_input());
        let c = RunConfig { seed: Some(u64::MAX), ..Default::default() };
        assert!(c.validate().unwrap_err().is_invalid_input());
        assert!(c.to_toml().is_err());
        let c = RunConfig::from_toml("[domain]\nr_cyl = 0.95").unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_toml("[barrier]\nlambda0_factor = 0.9").unwrap();
        assert!(c.validate().is_err());
    }
}
