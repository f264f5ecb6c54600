//! Stochastic variance-reduced conditional gradient sliding.
//!
//! Same outer/inner structure and step schedule as [`run_cgs`](crate::cgs::run_cgs);
//! the inner gradient `∇_k` is replaced by an SVRG-style estimate anchored at the
//! epoch's starting point.

use crate::cgs::{sliding_loop, CgsConfig, GradientSource};
use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::matrix::ParamMatrix;
use crate::model::{Problem, ProblemKind};
use crate::nuclear_ball::NuclearBall;
use crate::trace::SolverRun;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexityMode {
    ComponentConvex,
    ComponentNonconvex,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StorcConfig {
    pub base: CgsConfig,
    /// Lower smoothness `l` of the summands.
    pub lower_smoothness: f64,
    pub mode: ConvexityMode,
    /// Multiplies the minibatch constant (5200 or 8000); 1.0 is the theoretical schedule.
    pub scale_minibatch: f64,
}

/// `L̃ = (L + l)(1 + l/σ̂)`.
pub fn effective_smoothness(smoothness: f64, lower_smoothness: f64, sigma_hat: f64) -> f64 {
    (smoothness + lower_smoothness) * (1.0 + lower_smoothness / sigma_hat)
}

impl StorcConfig {
    pub fn new(base: CgsConfig, lower_smoothness: f64, mode: ConvexityMode) -> Self {
        Self {
            base,
            lower_smoothness,
            mode,
            scale_minibatch: 1.0,
        }
    }

    pub fn effective_smoothness(&self) -> f64 {
        effective_smoothness(self.base.smoothness, self.lower_smoothness, self.base.sigma_hat)
    }

    fn validate(&self, problem: &Problem) -> Result<()> {
        let expected = match problem.kind() {
            ProblemKind::Convex => ConvexityMode::ComponentConvex,
            ProblemKind::Nonconvex => ConvexityMode::ComponentNonconvex,
        };
        if self.mode != expected {
            return Err(Error::InvalidArgument(format!(
                "convexity mode {:?} does not match a {:?} problem",
                self.mode,
                problem.kind()
            )));
        }
        if self.mode == ConvexityMode::ComponentNonconvex && !(self.lower_smoothness > 0.0) {
            return Err(Error::InvalidArgument(
                "non-convex mode needs lower_smoothness > 0".into(),
            ));
        }
        if !(self.lower_smoothness >= 0.0) || !(self.scale_minibatch > 0.0) {
            return Err(Error::InvalidArgument(
                "lower_smoothness must be >= 0 and scale_minibatch > 0".into(),
            ));
        }
        Ok(())
    }
}

/// `m = ⌈5200 N_t L/σ̂⌉` (convex summands) or `⌈8000 N_t L̃/σ̂⌉` (non-convex
/// summands), times `scale_minibatch`, never below 1.
pub fn minibatch_size(cfg: &StorcConfig, inner_steps: usize) -> usize {
    let (constant, l) = match cfg.mode {
        ConvexityMode::ComponentConvex => (5200.0, cfg.base.smoothness),
        ConvexityMode::ComponentNonconvex => (8000.0, cfg.effective_smoothness()),
    };
    let m = (cfg.scale_minibatch * constant * inner_steps as f64 * l / cfg.base.sigma_hat).ceil();
    if m >= usize::MAX as f64 {
        usize::MAX
    } else {
        (m as usize).max(1)
    }
}

struct VarianceReduced<'a, R: Rng + ?Sized> {
    problem: &'a Problem,
    cfg: &'a StorcConfig,
    rng: &'a mut R,
    m: usize,
    anchor: Option<(ParamMatrix, ParamMatrix)>,
}

impl<R: Rng + ?Sized> GradientSource for VarianceReduced<'_, R> {
    fn begin_epoch(&mut self, y0: &ParamMatrix, inner_steps: usize, ledger: &mut CostLedger) -> Result<()> {
        self.m = minibatch_size(self.cfg, inner_steps);
        // The anchor gradient is only consumed when sampling is active.
        self.anchor = if self.m < self.problem.n() {
            let g = self.problem.full_gradient(y0, ledger)?;
            Some((y0.clone(), g))
        } else {
            None
        };
        Ok(())
    }

    fn gradient(&mut self, z: &ParamMatrix, ledger: &mut CostLedger) -> Result<ParamMatrix> {
        match &self.anchor {
            Some((y0, g0)) => self.problem.vr_gradient(z, y0, g0, self.m, self.rng, ledger),
            None => self.problem.full_gradient(z, ledger),
        }
    }
}

/// Runs STORC. `rng` drives minibatch sampling only; the linear oracle draws
/// from a stream seeded by `cfg.base.seed`, exactly as in CGS.
pub fn run_storc<R: Rng + ?Sized>(
    problem: &Problem,
    ball: &NuclearBall,
    cfg: &StorcConfig,
    ledger: &mut CostLedger,
    rng: &mut R,
) -> Result<SolverRun> {
    cfg.validate(problem)?;
    let mut source = VarianceReduced {
        problem,
        cfg,
        rng,
        m: 0,
        anchor: None,
    };
    sliding_loop(problem, ball, &cfg.base, ledger, &mut source)
}
