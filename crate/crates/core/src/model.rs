//! Finite-sum matrix-regression objective and its gradient oracles.
//!
//! The objective is `f(Θ) = (1/n) Σ f_i(Θ)` with
//!
//! * convex: `f_i(Θ) = ½ (y_i − ⟨X_i, Θ⟩)²`
//! * errors-in-variables: `f_i(Θ) = ½ (y_i − ⟨Z_i, Θ⟩)² − ½ vec(Θ)ᵀ Σ_w vec(Θ)`
//!
//! Every oracle call is charged to a [`CostLedger`].

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::matrix::{axpy, dot, ParamMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Convex,
    Nonconvex,
}

/// Smoothness and curvature constants attached to a problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Smoothness of the averaged objective `f` (Frobenius norm).
    pub smoothness: f64,
    /// Smoothness of every individual summand `f_i`.
    pub component_smoothness: f64,
    /// Lower smoothness `l` of the summands (0 when every `f_i` is convex).
    pub lower_smoothness: f64,
    /// Effective restricted strong convexity `σ̂`.
    pub rsc_sigma_hat: f64,
}

/// An immutable finite-sum least-squares problem over `d × d` matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    dim: usize,
    /// `n` flattened sensing matrices, each of length `dim²`, row-major.
    designs: Vec<f64>,
    responses: Vec<f64>,
    /// Diagonal of `Σ_w`, present exactly for the errors-in-variables loss.
    noise_cov: Option<Vec<f64>>,
    constants: Constants,
}

impl Problem {
    pub fn new(
        dim: usize,
        designs: Vec<f64>,
        responses: Vec<f64>,
        noise_cov: Option<Vec<f64>>,
        constants: Constants,
    ) -> Result<Self> {
        let p = dim * dim;
        let n = responses.len();
        if dim == 0 || n == 0 {
            return Err(Error::InvalidArgument(
                "problem needs dim >= 1 and at least one sample".into(),
            ));
        }
        if designs.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: (n, p),
                found: (designs.len() / p.max(1), designs.len() % p.max(1)),
            });
        }
        if let Some(w) = &noise_cov {
            if w.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: (p, 1),
                    found: (w.len(), 1),
                });
            }
            if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "noise covariance must be finite and nonnegative".into(),
                ));
            }
        }
        if designs.iter().chain(&responses).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("problem data"));
        }
        let c = &constants;
        if !(c.rsc_sigma_hat > 0.0) || !(c.smoothness >= c.rsc_sigma_hat) {
            return Err(Error::InvalidArgument(format!(
                "need smoothness ({}) >= rsc_sigma_hat ({}) > 0",
                c.smoothness, c.rsc_sigma_hat
            )));
        }
        if !(c.component_smoothness > 0.0) || !(c.lower_smoothness >= 0.0) {
            return Err(Error::InvalidArgument(
                "component smoothness must be positive and lower smoothness nonnegative".into(),
            ));
        }
        Ok(Self {
            dim,
            designs,
            responses,
            noise_cov,
            constants,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.responses.len()
    }

    pub fn kind(&self) -> ProblemKind {
        if self.noise_cov.is_some() {
            ProblemKind::Nonconvex
        } else {
            ProblemKind::Convex
        }
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    pub fn designs(&self) -> &[f64] {
        &self.designs
    }

    pub fn design(&self, i: usize) -> &[f64] {
        let p = self.dim * self.dim;
        &self.designs[i * p..(i + 1) * p]
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn noise_cov(&self) -> Option<&[f64]> {
        self.noise_cov.as_deref()
    }

    fn check(&self, theta: &ParamMatrix) -> Result<()> {
        theta.check_shape(self.dim, self.dim)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n(),
            });
        }
        Ok(())
    }

    fn residual(&self, i: usize, theta: &[f64]) -> f64 {
        self.responses[i] - dot(self.design(i), theta)
    }

    /// `vec(Θ)ᵀ Σ_w vec(Θ)`, zero for the convex loss.
    fn noise_quadratic(&self, theta: &[f64]) -> f64 {
        match &self.noise_cov {
            Some(w) => w.iter().zip(theta).map(|(wi, t)| wi * t * t).sum(),
            None => 0.0,
        }
    }

    /// `grad -= Σ_w vec(Θ)`.
    fn subtract_noise_term(&self, grad: &mut [f64], theta: &[f64]) {
        if let Some(w) = &self.noise_cov {
            for ((g, wi), t) in grad.iter_mut().zip(w).zip(theta) {
                *g -= wi * t;
            }
        }
    }

    pub fn objective(&self, theta: &ParamMatrix) -> Result<f64> {
        self.check(theta)?;
        let t = theta.as_slice();
        let n = self.n();
        let sq: f64 = (0..n).map(|i| self.residual(i, t).powi(2)).sum();
        let value = 0.5 * sq / n as f64 - 0.5 * self.noise_quadratic(t);
        if !value.is_finite() {
            return Err(Error::NonFinite("objective value"));
        }
        Ok(value)
    }

    /// Value of the single summand `f_i`.
    pub fn component_objective(&self, i: usize, theta: &ParamMatrix) -> Result<f64> {
        self.check(theta)?;
        self.check_index(i)?;
        let t = theta.as_slice();
        let value = 0.5 * self.residual(i, t).powi(2) - 0.5 * self.noise_quadratic(t);
        if !value.is_finite() {
            return Err(Error::NonFinite("component objective value"));
        }
        Ok(value)
    }

    pub fn full_gradient(&self, theta: &ParamMatrix, ledger: &mut CostLedger) -> Result<ParamMatrix> {
        self.check(theta)?;
        let t = theta.as_slice();
        let n = self.n();
        let mut grad = vec![0.0; t.len()];
        for i in 0..n {
            let r = self.residual(i, t);
            axpy(&mut grad, -r / n as f64, self.design(i));
        }
        self.subtract_noise_term(&mut grad, t);
        ledger.full_grad_passes += 1;
        ledger.component_grad_evals += n as u64;
        finite(ParamMatrix::from_vec(self.dim, self.dim, grad)?, "full gradient")
    }

    pub fn component_gradient(
        &self,
        i: usize,
        theta: &ParamMatrix,
        ledger: &mut CostLedger,
    ) -> Result<ParamMatrix> {
        self.check(theta)?;
        self.check_index(i)?;
        let t = theta.as_slice();
        let r = self.residual(i, t);
        let mut grad: Vec<f64> = self.design(i).iter().map(|x| -r * x).collect();
        self.subtract_noise_term(&mut grad, t);
        ledger.component_grad_evals += 1;
        finite(ParamMatrix::from_vec(self.dim, self.dim, grad)?, "component gradient")
    }

    /// Variance-reduced gradient estimate anchored at `anchor`:
    /// `(1/|J|) Σ_{j∈J} (∇f_j(z) − ∇f_j(anchor)) + ∇f(anchor)` with `J` drawn
    /// uniformly with replacement.
    ///
    /// When `m >= n` the exact gradient `∇f(z)` is returned instead; it has zero
    /// variance and costs fewer component evaluations than `2m`. Each sampled
    /// index is charged as two component gradients.
    pub fn vr_gradient<R: Rng + ?Sized>(
        &self,
        z: &ParamMatrix,
        anchor: &ParamMatrix,
        anchor_grad: &ParamMatrix,
        m: usize,
        rng: &mut R,
        ledger: &mut CostLedger,
    ) -> Result<ParamMatrix> {
        if m == 0 {
            return Err(Error::InvalidArgument("minibatch size must be >= 1".into()));
        }
        let n = self.n();
        if m >= n {
            return self.full_gradient(z, ledger);
        }
        self.check(z)?;
        self.check(anchor)?;
        self.check(anchor_grad)?;
        let zs = z.as_slice();
        let ys = anchor.as_slice();
        let mut acc = vec![0.0; zs.len()];
        for _ in 0..m {
            let j = rng.random_range(0..n);
            let x = self.design(j);
            // ∇f_j(z) − ∇f_j(y) = (⟨x,z⟩ − ⟨x,y⟩) x − Σ_w (z − y); the Σ_w part is j-independent.
            let coef = dot(x, zs) - dot(x, ys);
            axpy(&mut acc, coef / m as f64, x);
        }
        let diff: Vec<f64> = zs.iter().zip(ys).map(|(a, b)| a - b).collect();
        self.subtract_noise_term(&mut acc, &diff);
        axpy(&mut acc, 1.0, anchor_grad.as_slice());
        ledger.component_grad_evals += 2 * m as u64;
        finite(ParamMatrix::from_vec(self.dim, self.dim, acc)?, "variance-reduced gradient")
    }
}

fn finite(m: ParamMatrix, what: &'static str) -> Result<ParamMatrix> {
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::NonFinite(what))
    }
}
