//! Conditional gradient sliding with restarted outer epochs.
//!
//! Each outer epoch `t` runs `N_t` accelerated steps from `θ_{t−1}`; every
//! step's proximal subproblem is solved inexactly by Frank-Wolfe, so the
//! method touches the constraint set only through its linear oracle.

use crate::error::{Error, Result};
use crate::fw_subsolver::{solve_subproblem, SubproblemSpec};
use crate::ledger::CostLedger;
use crate::matrix::ParamMatrix;
use crate::model::{Problem, ProblemKind};
use crate::nuclear_ball::NuclearBall;
use crate::trace::{EpochRecord, SolverRun, Stopwatch};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgsConfig {
    /// Smoothness constant `L`.
    pub smoothness: f64,
    /// Effective restricted strong convexity `σ̂`.
    pub sigma_hat: f64,
    /// Upper estimate of the initial optimality gap `f(θ₀) − f(θ̂)`.
    pub delta0: f64,
    pub outer_iters: usize,
    pub theta0: ParamMatrix,
    /// Seeds the random start vectors of the linear oracle.
    pub seed: u64,
    /// Stop early once the Wolfe gap of the full gradient at `θ_t` is below this.
    /// Costs one extra full gradient and oracle call per epoch when set.
    pub gap_tol: Option<f64>,
}

/// Step parameters for inner step `k` of outer epoch `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub inner_steps: usize,
    pub gamma: f64,
    pub beta: f64,
    pub eta: f64,
}

/// `N_t = ⌈8 √(L/σ̂)⌉`, the same for every epoch.
pub fn inner_steps(smoothness: f64, sigma_hat: f64) -> usize {
    (8.0 * (smoothness / sigma_hat).sqrt()).ceil() as usize
}

pub fn schedule(cfg: &CgsConfig, t: usize, k: usize) -> Schedule {
    let l = cfg.smoothness;
    let n_t = inner_steps(l, cfg.sigma_hat);
    let kf = k as f64;
    Schedule {
        inner_steps: n_t,
        gamma: 2.0 / (kf + 1.0),
        beta: 3.0 * l / kf,
        eta: 8.0 * l * cfg.delta0 * 0.5f64.powi(t as i32) / (cfg.sigma_hat * n_t as f64 * kf),
    }
}

/// Certified `δ₀ = f(θ₀) − f_lb`: the convex loss is nonnegative, and the
/// corrected loss is bounded below by `−½ λ_max(Σ_w) ρ²` on the ball.
pub fn default_delta0(problem: &Problem, ball: &NuclearBall, theta0: &ParamMatrix) -> Result<f64> {
    let f0 = problem.objective(theta0)?;
    let lower = match problem.kind() {
        ProblemKind::Convex => 0.0,
        ProblemKind::Nonconvex => {
            let w_max = problem
                .noise_cov()
                .map(|w| w.iter().cloned().fold(0.0, f64::max))
                .unwrap_or(0.0);
            -0.5 * w_max * ball.radius().powi(2)
        }
    };
    Ok((f0 - lower).max(f64::MIN_POSITIVE))
}

impl CgsConfig {
    /// Config with `L`, `σ̂` taken from the problem and the certified default `δ₀`.
    pub fn for_problem(
        problem: &Problem,
        ball: &NuclearBall,
        theta0: ParamMatrix,
        outer_iters: usize,
        seed: u64,
    ) -> Result<Self> {
        Ok(Self {
            smoothness: problem.constants().smoothness,
            sigma_hat: problem.constants().rsc_sigma_hat,
            delta0: default_delta0(problem, ball, &theta0)?,
            outer_iters,
            theta0,
            seed,
            gap_tol: None,
        })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.smoothness > 0.0) || !(self.sigma_hat > 0.0) || !(self.delta0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need L, sigma_hat, delta0 > 0 (got {}, {}, {})",
                self.smoothness, self.sigma_hat, self.delta0
            )));
        }
        if self.outer_iters == 0 {
            return Err(Error::InvalidArgument("outer_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Source of the gradient estimate `∇_k` used by the sliding loop.
pub(crate) trait GradientSource {
    /// Called once per outer epoch with `y₀ = θ_{t−1}` and the epoch's `N_t`.
    fn begin_epoch(&mut self, y0: &ParamMatrix, inner_steps: usize, ledger: &mut CostLedger) -> Result<()>;
    fn gradient(&mut self, z: &ParamMatrix, ledger: &mut CostLedger) -> Result<ParamMatrix>;
}

struct ExactGradient<'a>(&'a Problem);

impl GradientSource for ExactGradient<'_> {
    fn begin_epoch(&mut self, _: &ParamMatrix, _: usize, _: &mut CostLedger) -> Result<()> {
        Ok(())
    }

    fn gradient(&mut self, z: &ParamMatrix, ledger: &mut CostLedger) -> Result<ParamMatrix> {
        self.0.full_gradient(z, ledger)
    }
}

pub fn run_cgs(
    problem: &Problem,
    ball: &NuclearBall,
    cfg: &CgsConfig,
    ledger: &mut CostLedger,
) -> Result<SolverRun> {
    sliding_loop(problem, ball, cfg, ledger, &mut ExactGradient(problem))
}

pub(crate) fn sliding_loop<G: GradientSource>(
    problem: &Problem,
    ball: &NuclearBall,
    cfg: &CgsConfig,
    ledger: &mut CostLedger,
    source: &mut G,
) -> Result<SolverRun> {
    cfg.validate()?;
    let d = problem.dim();
    if ball.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: (d, d),
            found: (ball.dim(), ball.dim()),
        });
    }
    ball.check_feasible(&cfg.theta0)?;

    let clock = Stopwatch::start();
    let mut lo_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = cfg.theta0.clone();
    let mut epochs = vec![EpochRecord {
        outer_t: 0,
        theta: theta.clone(),
        f_value: problem.objective(&theta)?,
        ledger: *ledger,
        wall_ms: clock.elapsed_ms(),
        max_inner_gap: 0.0,
    }];

    for t in 1..=cfg.outer_iters {
        let n_t = inner_steps(cfg.smoothness, cfg.sigma_hat);
        let mut x = theta.clone();
        let mut y = theta.clone();
        source
            .begin_epoch(&y, n_t, ledger)
            .map_err(|e| e.at_step(t, 0))?;
        let mut max_inner_gap: f64 = 0.0;
        for k in 1..=n_t {
            let s = schedule(cfg, t, k);
            let z = y.lerp(&x, s.gamma);
            let grad = source.gradient(&z, ledger).map_err(|e| e.at_step(t, k))?;
            let spec = SubproblemSpec::new(s.beta, x.clone(), grad, s.eta, x, ball.radius());
            let sol = solve_subproblem(&spec, ball, &mut lo_rng, ledger).map_err(|e| e.at_step(t, k))?;
            max_inner_gap = max_inner_gap.max(sol.final_gap);
            y = y.lerp(&sol.x, s.gamma);
            x = sol.x;
        }
        theta = y;
        let f_value = problem.objective(&theta).map_err(|e| e.at_step(t, n_t))?;
        epochs.push(EpochRecord {
            outer_t: t,
            theta: theta.clone(),
            f_value,
            ledger: *ledger,
            wall_ms: clock.elapsed_ms(),
            max_inner_gap,
        });
        log::debug!("epoch {t}: f = {f_value:.6e}, max inner gap = {max_inner_gap:.3e}");

        if let Some(tol) = cfg.gap_tol {
            let g = problem.full_gradient(&theta, ledger)?;
            let (gap, _) = ball.wolfe_gap(&g, &theta, &mut lo_rng, ledger)?;
            if gap <= tol {
                break;
            }
        }
    }
    Ok(SolverRun { theta, epochs })
}
