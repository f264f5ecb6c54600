//! Projection-based comparators: batch projected gradient descent and
//! projected SVRG. Both reach the constraint set only through
//! [`NuclearBall::project`].

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::matrix::ParamMatrix;
use crate::model::Problem;
use crate::nuclear_ball::NuclearBall;
use crate::trace::{EpochRecord, SolverRun, Stopwatch};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// Defaults: `1/L` for PGD, `1/(10 L_i)` for SVRG with `L_i` the summand smoothness.
    pub step_size: Option<f64>,
    /// PGD iterations, or SVRG outer epochs.
    pub iters: usize,
    /// Inner steps per SVRG epoch; defaults to `2n`.
    pub svrg_epoch_len: Option<usize>,
    pub svrg_batch: usize,
    pub theta0: ParamMatrix,
}

impl BaselineConfig {
    pub fn new(theta0: ParamMatrix, iters: usize) -> Self {
        Self {
            step_size: None,
            iters,
            svrg_epoch_len: None,
            svrg_batch: 1,
            theta0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iters == 0 || self.svrg_batch == 0 || self.svrg_epoch_len == Some(0) {
            return Err(Error::InvalidArgument(
                "iters, svrg_batch and svrg_epoch_len must be >= 1".into(),
            ));
        }
        if let Some(s) = self.step_size {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidArgument(format!("step size must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

pub fn pgd_step_size(problem: &Problem, cfg: &BaselineConfig) -> f64 {
    cfg.step_size.unwrap_or(1.0 / problem.constants().smoothness)
}

pub fn svrg_step_size(problem: &Problem, cfg: &BaselineConfig) -> f64 {
    cfg.step_size
        .unwrap_or(1.0 / (10.0 * problem.constants().component_smoothness))
}

fn start(problem: &Problem, ball: &NuclearBall, cfg: &BaselineConfig) -> Result<()> {
    cfg.validate()?;
    if ball.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: (problem.dim(), problem.dim()),
            found: (ball.dim(), ball.dim()),
        });
    }
    ball.check_feasible(&cfg.theta0)
}

/// `θ ← Π(θ − step ∇f(θ))`, one trace record per iteration.
pub fn run_pgd(
    problem: &Problem,
    ball: &NuclearBall,
    cfg: &BaselineConfig,
    ledger: &mut CostLedger,
) -> Result<SolverRun> {
    start(problem, ball, cfg)?;
    let step = pgd_step_size(problem, cfg);
    let clock = Stopwatch::start();
    let mut theta = cfg.theta0.clone();
    let mut epochs = vec![record(0, problem, &theta, ledger, &clock)?];
    for t in 1..=cfg.iters {
        let g = problem.full_gradient(&theta, ledger)?;
        theta.axpy(-step, &g);
        theta = ball.project(&theta, ledger).map_err(|e| e.at_step(t, 0))?;
        epochs.push(record(t, problem, &theta, ledger, &clock)?);
    }
    Ok(SolverRun { theta, epochs })
}

/// Projected SVRG: per epoch one anchor gradient, then `svrg_epoch_len`
/// projected steps along `∇f_j(θ) − ∇f_j(anchor) + ∇f(anchor)` averaged over
/// `svrg_batch` sampled indices. The epoch output is its last iterate.
pub fn run_svrg<R: Rng + ?Sized>(
    problem: &Problem,
    ball: &NuclearBall,
    cfg: &BaselineConfig,
    ledger: &mut CostLedger,
    rng: &mut R,
) -> Result<SolverRun> {
    start(problem, ball, cfg)?;
    let step = svrg_step_size(problem, cfg);
    let epoch_len = cfg.svrg_epoch_len.unwrap_or(2 * problem.n());
    let sampling = cfg.svrg_batch < problem.n();
    let clock = Stopwatch::start();
    let mut theta = cfg.theta0.clone();
    let mut epochs = vec![record(0, problem, &theta, ledger, &clock)?];
    for t in 1..=cfg.iters {
        let anchor = theta.clone();
        let anchor_grad = if sampling {
            problem.full_gradient(&anchor, ledger)?
        } else {
            ParamMatrix::zeros(problem.dim(), problem.dim())
        };
        for k in 1..=epoch_len {
            let g = problem
                .vr_gradient(&theta, &anchor, &anchor_grad, cfg.svrg_batch, rng, ledger)
                .map_err(|e| e.at_step(t, k))?;
            theta.axpy(-step, &g);
            theta = ball.project(&theta, ledger).map_err(|e| e.at_step(t, k))?;
        }
        epochs.push(record(t, problem, &theta, ledger, &clock)?);
    }
    Ok(SolverRun { theta, epochs })
}

fn record(
    t: usize,
    problem: &Problem,
    theta: &ParamMatrix,
    ledger: &CostLedger,
    clock: &Stopwatch,
) -> Result<EpochRecord> {
    Ok(EpochRecord {
        outer_t: t,
        theta: theta.clone(),
        f_value: problem.objective(theta)?,
        ledger: *ledger,
        wall_ms: clock.elapsed_ms(),
        max_inner_gap: f64::NAN,
    })
}
