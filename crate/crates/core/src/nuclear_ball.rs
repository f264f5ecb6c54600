//! The nuclear-norm ball `{Θ : ‖Θ‖_* ≤ ρ}`.
//!
//! The linear oracle needs only the leading singular pair of its argument,
//! obtained here by block power iteration on `GᵀG`. Exact Euclidean projection needs
//! a full SVD and is provided for the projection-based baselines only.

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::matrix::{dot, ParamMatrix};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearBall {
    radius: f64,
    dim: usize,
    /// Relative change of the Rayleigh quotient at which power iteration stops.
    pub power_iter_tol: f64,
    pub power_iter_max: usize,
}

/// Leading singular triple `(σ_max, u, v)` of a matrix.
#[derive(Debug, Clone)]
pub struct SingularTriple {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl NuclearBall {
    pub const DEFAULT_POWER_TOL: f64 = 1e-10;

    pub fn new(radius: f64, dim: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("ball dimension must be >= 1".into()));
        }
        Ok(Self {
            radius,
            dim,
            power_iter_tol: Self::DEFAULT_POWER_TOL,
            power_iter_max: Self::default_power_iter_max(dim),
        })
    }

    /// `max(10 d, 1000)`.
    pub fn default_power_iter_max(dim: usize) -> usize {
        (10 * dim).max(1000)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Frobenius diameter, attained by `±ρ u vᵀ`.
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn contains(&self, x: &ParamMatrix, rel_tol: f64) -> Result<bool> {
        Ok(x.nuclear_norm()? <= self.radius * (1.0 + rel_tol))
    }

    pub(crate) fn check_feasible(&self, x: &ParamMatrix) -> Result<()> {
        x.check_shape(self.dim, self.dim)?;
        let norm = x.nuclear_norm()?;
        if norm > self.radius * (1.0 + 1e-9) {
            return Err(Error::Infeasible {
                norm,
                radius: self.radius,
            });
        }
        Ok(())
    }

    /// Leading singular triple by block power iteration on `GᵀG`, restarting once
    /// from a fresh random vector before giving up. Returns `None` for `G = 0`.
    pub fn top_singular_triple<R: Rng + ?Sized>(
        &self,
        g: &ParamMatrix,
        rng: &mut R,
    ) -> Result<Option<SingularTriple>> {
        if !g.is_finite() {
            return Err(Error::NonFinite("linear oracle input"));
        }
        if g.is_zero() {
            return Ok(None);
        }
        let mut last_change = f64::INFINITY;
        for _attempt in 0..2 {
            match power_iteration(g, self.power_iter_tol, self.power_iter_max, rng) {
                Ok(t) => return Ok(Some(t)),
                Err(change) => last_change = change,
            }
        }
        Err(Error::PowerIteration {
            iterations: self.power_iter_max,
            residual: last_change,
        })
    }

    /// Minimizer of `⟨G, S⟩` over the ball: `S = −ρ u₁ v₁ᵀ`.
    pub fn linear_oracle<R: Rng + ?Sized>(
        &self,
        g: &ParamMatrix,
        rng: &mut R,
        ledger: &mut CostLedger,
    ) -> Result<ParamMatrix> {
        g.check_shape(self.dim, self.dim)?;
        ledger.lo_calls += 1;
        Ok(match self.top_singular_triple(g, rng)? {
            Some(t) => ParamMatrix::outer(&t.u, &t.v, -self.radius),
            None => ParamMatrix::zeros(self.dim, self.dim),
        })
    }

    /// Frank-Wolfe gap `⟨∇, x − s⟩` with `s` the oracle atom for `∇`.
    pub fn wolfe_gap<R: Rng + ?Sized>(
        &self,
        grad: &ParamMatrix,
        x: &ParamMatrix,
        rng: &mut R,
        ledger: &mut CostLedger,
    ) -> Result<(f64, ParamMatrix)> {
        x.check_shape(self.dim, self.dim)?;
        let atom = self.linear_oracle(grad, rng, ledger)?;
        let gap = grad.dot(x) - grad.dot(&atom);
        Ok((gap, atom))
    }

    /// Euclidean projection onto the ball via a full SVD.
    pub fn project(&self, x: &ParamMatrix, ledger: &mut CostLedger) -> Result<ParamMatrix> {
        x.check_shape(self.dim, self.dim)?;
        if !x.is_finite() {
            return Err(Error::NonFinite("projection input"));
        }
        ledger.projection_calls += 1;
        let svd = x.to_dmatrix().svd(true, true);
        let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
        if sigma.iter().sum::<f64>() <= self.radius {
            return Ok(x.clone());
        }
        let shrunk = l1_ball_project(&sigma, self.radius)?;
        let u = svd.u.ok_or(Error::Svd)?;
        let v_t = svd.v_t.ok_or(Error::Svd)?;
        let mut out = ParamMatrix::zeros(self.dim, self.dim);
        for (k, &s) in shrunk.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            let uk: Vec<f64> = u.column(k).iter().copied().collect();
            let vk: Vec<f64> = v_t.row(k).iter().copied().collect();
            out.axpy(1.0, &ParamMatrix::outer(&uk, &vk, s));
        }
        if !out.is_finite() {
            return Err(Error::Svd);
        }
        Ok(out)
    }
}

/// Block size of the subspace iteration.
pub const POWER_BLOCK: usize = 8;

/// One run of block power iteration on `GᵀG` with a Rayleigh-Ritz step,
/// stopping when the top Ritz value changes by at most `tol` (relative).
/// Nearly tied leading singular values inside the block do not slow it down.
/// `Err` carries the last relative change.
fn power_iteration<R: Rng + ?Sized>(
    g: &ParamMatrix,
    tol: f64,
    max_iter: usize,
    rng: &mut R,
) -> std::result::Result<SingularTriple, f64> {
    let cols = g.cols();
    let b = POWER_BLOCK.min(cols).min(g.rows()).max(1);
    let gm = g.to_dmatrix();
    let start = DMatrix::from_fn(cols, b, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = start.qr().q();
    let mut prev = 0.0;
    let mut change = f64::INFINITY;
    for it in 0..max_iter {
        let w = &gm * &q;
        let h = w.transpose() * &w;
        let eig = h.symmetric_eigen();
        let (top, &ritz) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("block is non-empty");
        if !(ritz > 0.0) {
            // start block orthogonal to the row space
            return Err(f64::INFINITY);
        }
        if it > 0 {
            change = (ritz - prev).abs() / ritz;
        }
        if change <= tol || cols == b {
            let v = &q * eig.eigenvectors.column(top);
            let mut u: Vec<f64> = (&gm * &v).iter().copied().collect();
            let sigma = normalize(&mut u);
            return Ok(SingularTriple {
                sigma,
                u,
                v: v.iter().copied().collect(),
            });
        }
        prev = ritz;
        q = (gm.transpose() * w).qr().q();
    }
    Err(change)
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Euclidean projection of a nonnegative vector onto `{w ≥ 0 : Σ w ≤ z}`,
/// by sorting and soft-thresholding.
pub fn l1_ball_project(v: &[f64], z: f64) -> Result<Vec<f64>> {
    if !(z > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "l1 radius must be positive, got {z}"
        )));
    }
    if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "l1 projection expects finite nonnegative entries".into(),
        ));
    }
    if v.iter().sum::<f64>() <= z {
        return Ok(v.to_vec());
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - z) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}
