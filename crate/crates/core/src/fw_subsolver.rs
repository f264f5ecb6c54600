//! Frank-Wolfe solver for the sliding subproblem
//! `min_{‖x‖_* ≤ ρ} g(x) = (β/2)‖x − c‖² + ⟨∇, x⟩`.

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::matrix::ParamMatrix;
use crate::nuclear_ball::NuclearBall;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct SubproblemSpec {
    pub beta: f64,
    pub center: ParamMatrix,
    pub linear_term: ParamMatrix,
    /// Exit tolerance on the Wolfe gap.
    pub eta: f64,
    pub warm_start: ParamMatrix,
    pub max_fw_iters: usize,
}

#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub x: ParamMatrix,
    pub final_gap: f64,
    /// Frank-Wolfe steps taken; the solver makes `iters + 1` oracle calls.
    pub iters: usize,
}

impl SubproblemSpec {
    /// Spec with the default iteration budget `⌈8β(2ρ)²/η⌉ + 16`.
    pub fn new(
        beta: f64,
        center: ParamMatrix,
        linear_term: ParamMatrix,
        eta: f64,
        warm_start: ParamMatrix,
        radius: f64,
    ) -> Self {
        Self {
            beta,
            max_fw_iters: default_max_iters(beta, radius, eta),
            center,
            linear_term,
            eta,
            warm_start,
        }
    }

    pub fn value(&self, x: &ParamMatrix) -> f64 {
        let diff = x.sub(&self.center);
        0.5 * self.beta * diff.frobenius_norm_sq() + self.linear_term.dot(x)
    }

    pub fn gradient(&self, x: &ParamMatrix) -> ParamMatrix {
        let mut g = x.sub(&self.center);
        g.scale_mut(self.beta);
        g.axpy(1.0, &self.linear_term);
        g
    }
}

pub fn default_max_iters(beta: f64, radius: f64, eta: f64) -> usize {
    let bound = (8.0 * beta * (2.0 * radius).powi(2) / eta).ceil();
    // Saturate well below usize::MAX; the budget is a guard, not a target.
    if bound.is_finite() && bound < 1e12 {
        bound as usize + 16
    } else {
        1_000_000_000_000
    }
}

/// Runs Frank-Wolfe with exact line search from the warm start until the
/// Wolfe gap drops to `eta`. By convexity of `g`, the returned point satisfies
/// `g(x) − min g ≤ final_gap ≤ eta`.
pub fn solve_subproblem<R: Rng + ?Sized>(
    spec: &SubproblemSpec,
    ball: &NuclearBall,
    rng: &mut R,
    ledger: &mut CostLedger,
) -> Result<SubproblemSolution> {
    if !(spec.beta > 0.0) || !(spec.eta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "subproblem needs beta > 0 and eta > 0 (beta = {}, eta = {})",
            spec.beta, spec.eta
        )));
    }
    let d = ball.dim();
    spec.center.check_shape(d, d)?;
    spec.linear_term.check_shape(d, d)?;
    ball.check_feasible(&spec.warm_start)?;

    let mut x = spec.warm_start.clone();
    let mut iters = 0;
    loop {
        let grad = spec.gradient(&x);
        let (gap, atom) = ball.wolfe_gap(&grad, &x, rng, ledger)?;
        if gap <= spec.eta {
            return Ok(SubproblemSolution {
                x,
                final_gap: gap,
                iters,
            });
        }
        if iters >= spec.max_fw_iters {
            return Err(Error::SubsolverMaxIters {
                iters,
                gap,
                eta: spec.eta,
            });
        }
        let dir = atom.sub(&x);
        let curvature = spec.beta * dir.frobenius_norm_sq();
        // gap = ⟨∇g(x), x − s⟩, so this is the exact minimizer along the segment.
        let step = if curvature > 0.0 {
            (gap / curvature).clamp(0.0, 1.0)
        } else {
            1.0
        };
        x.axpy(step, &dir);
        iters += 1;
    }
}
