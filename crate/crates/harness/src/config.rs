//! Experiment configuration: a JSON tree validated key by key.

use crate::error::{HarnessError, Result};
use projfree_core::matreg::GenSpec;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Cgs,
    Storc,
    Pgd,
    Svrg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Cgs, SolverKind::Storc, SolverKind::Pgd, SolverKind::Svrg];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Cgs => "cgs",
            SolverKind::Storc => "storc",
            SolverKind::Pgd => "pgd",
            SolverKind::Svrg => "svrg",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown solver `{s}` (expected cgs, storc, pgd or svrg)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CgsBlock {
    pub outer_iters: usize,
    /// `None` selects the certified default.
    pub delta0: Option<f64>,
    pub gap_tol: Option<f64>,
}

impl Default for CgsBlock {
    fn default() -> Self {
        Self {
            outer_iters: 8,
            delta0: None,
            gap_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StorcBlock {
    pub outer_iters: usize,
    pub delta0: Option<f64>,
    pub gap_tol: Option<f64>,
    pub scale_minibatch: f64,
}

impl Default for StorcBlock {
    fn default() -> Self {
        Self {
            outer_iters: 8,
            delta0: None,
            gap_tol: None,
            scale_minibatch: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PgdBlock {
    pub iters: usize,
    pub step_size: Option<f64>,
}

impl Default for PgdBlock {
    fn default() -> Self {
        Self {
            iters: 200,
            step_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvrgBlock {
    /// Outer epochs.
    pub iters: usize,
    pub epoch_len: Option<usize>,
    pub batch: usize,
    pub step_size: Option<f64>,
}

impl Default for SvrgBlock {
    fn default() -> Self {
        Self {
            iters: 20,
            epoch_len: None,
            batch: 1,
            step_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase", deny_unknown_fields)]
pub enum ReferencePolicy {
    /// Solve (or reuse a cached solve) to the given certificate tolerance.
    Compute { tol: f64 },
    /// Require a cached solve in `dir`; nothing is computed.
    Load { dir: PathBuf, tol: f64 },
}

impl Default for ReferencePolicy {
    fn default() -> Self {
        ReferencePolicy::Compute { tol: 1e-10 }
    }
}

impl ReferencePolicy {
    pub fn tol(&self) -> f64 {
        match self {
            ReferencePolicy::Compute { tol } | ReferencePolicy::Load { tol, .. } => *tol,
        }
    }

    pub fn set_tol(&mut self, value: f64) {
        match self {
            ReferencePolicy::Compute { tol } | ReferencePolicy::Load { tol, .. } => *tol = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GenSpec,
    pub solvers: Vec<SolverKind>,
    #[serde(default)]
    pub cgs: CgsBlock,
    #[serde(default)]
    pub storc: StorcBlock,
    #[serde(default)]
    pub pgd: PgdBlock,
    #[serde(default)]
    pub svrg: SvrgBlock,
    #[serde(default)]
    pub reference: ReferencePolicy,
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    /// When false, `wall_ms` is written as 0 so reruns are byte-identical.
    #[serde(default)]
    pub record_wall_time: bool,
}

fn key_error(key: &str, msg: impl fmt::Display) -> HarnessError {
    HarnessError::Config(format!("{key}: {msg}"))
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(key_error(key, format!("must be a positive finite number, got {v}")))
    }
}

fn positive_opt(key: &str, v: Option<f64>) -> Result<()> {
    v.map_or(Ok(()), |v| positive(key, v))
}

fn at_least_one(key: &str, v: usize) -> Result<()> {
    if v >= 1 {
        Ok(())
    } else {
        Err(key_error(key, "must be >= 1"))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "config".to_string() } else { path };
            key_error(&path, e.inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.generator;
        at_least_one("generator.d", g.d)?;
        at_least_one("generator.r", g.r)?;
        if g.r > g.d {
            return Err(key_error("generator.r", format!("rank {} exceeds d = {}", g.r, g.d)));
        }
        positive("generator.alpha", g.alpha)?;
        positive("generator.L", g.smoothness)?;
        positive("generator.sigma_hat", g.sigma_hat)?;
        positive("generator.rho", g.rho)?;
        if !(g.label_noise_std >= 0.0) {
            return Err(key_error("generator.label_noise_std", "must be >= 0"));
        }
        if let Some(w) = g.w_scale {
            if !(0.0..=0.25).contains(&w) {
                return Err(key_error("generator.w_scale", format!("must lie in [0, 0.25], got {w}")));
            }
        }
        g.validate().map_err(|e| key_error("generator", e))?;

        if self.solvers.is_empty() {
            return Err(key_error("solvers", "must name at least one solver"));
        }
        for (i, s) in self.solvers.iter().enumerate() {
            if self.solvers[..i].contains(s) {
                return Err(key_error("solvers", format!("`{s}` listed twice")));
            }
        }
        at_least_one("cgs.outer_iters", self.cgs.outer_iters)?;
        positive_opt("cgs.delta0", self.cgs.delta0)?;
        positive_opt("cgs.gap_tol", self.cgs.gap_tol)?;
        at_least_one("storc.outer_iters", self.storc.outer_iters)?;
        positive_opt("storc.delta0", self.storc.delta0)?;
        positive_opt("storc.gap_tol", self.storc.gap_tol)?;
        positive("storc.scale_minibatch", self.storc.scale_minibatch)?;
        at_least_one("pgd.iters", self.pgd.iters)?;
        positive_opt("pgd.step_size", self.pgd.step_size)?;
        at_least_one("svrg.iters", self.svrg.iters)?;
        at_least_one("svrg.batch", self.svrg.batch)?;
        if let Some(len) = self.svrg.epoch_len {
            at_least_one("svrg.epoch_len", len)?;
        }
        positive_opt("svrg.step_size", self.svrg.step_size)?;
        positive("reference.tol", self.reference.tol())?;
        if self.seeds.is_empty() {
            return Err(key_error("seeds", "must contain at least one seed"));
        }
        Ok(())
    }

    /// Checks the run-time invariant that referenced files exist.
    pub fn check_files(&self) -> Result<()> {
        if let ReferencePolicy::Load { dir, .. } = &self.reference {
            if !dir.is_dir() {
                return Err(key_error("reference.dir", format!("{} is not a directory", dir.display())));
            }
        }
        Ok(())
    }

    /// Instance and solver seed for run index `i`: `generator.seed ⊕ seeds[i]`.
    pub fn derived_seed(&self, i: usize) -> u64 {
        self.generator.seed ^ self.seeds[i]
    }

    /// Generator spec for the instance of run index `i`.
    pub fn gen_spec(&self, i: usize) -> GenSpec {
        GenSpec {
            seed: self.derived_seed(i),
            ..self.generator.clone()
        }
    }
}
