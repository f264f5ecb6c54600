//! Low-rank matrix regression instances and restricted-strong-convexity
//! diagnostics.
//!
//! Designs are Gaussian with diagonal covariance `Σ_x = diag(L, σ̂, …, σ̂)`.
//! The errors-in-variables variant observes `Z_i = X_i + W_i` with
//! `vec(W_i) ~ N(0, w·σ̂·I)` and uses the bias-corrected loss.

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::matrix::{axpy, dot, ParamMatrix};
use crate::model::{Constants, Problem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub theta_star: ParamMatrix,
    pub rank: usize,
    pub nuclear_norm: f64,
}

/// Generator parameters for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub d: usize,
    pub r: usize,
    /// Sample multiplier: `n = round(alpha · r · d)`.
    pub alpha: f64,
    /// Leading diagonal entry of `Σ_x`.
    #[serde(rename = "L")]
    pub smoothness: f64,
    /// Remaining diagonal entries of `Σ_x`.
    pub sigma_hat: f64,
    #[serde(default = "GenSpec::default_label_noise")]
    pub label_noise_std: f64,
    /// `Σ_w = w_scale · σ̂ · I`; `None` generates the convex problem.
    #[serde(default)]
    pub w_scale: Option<f64>,
    /// Ball radius, also the nuclear norm of the planted `Θ*`.
    pub rho: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GenSpec {
    pub const DEFAULT_LABEL_NOISE: f64 = 0.1;

    fn default_label_noise() -> f64 {
        Self::DEFAULT_LABEL_NOISE
    }

    pub fn n(&self) -> usize {
        (self.alpha * (self.r * self.d) as f64).round() as usize
    }

    /// `λ_min(Σ_x)`.
    pub fn lambda_min(&self) -> f64 {
        if self.d == 1 {
            self.smoothness
        } else {
            self.smoothness.min(self.sigma_hat)
        }
    }

    /// `λ_max(Σ_x)`, which for a diagonal covariance equals
    /// `ξ(Σ_x) = sup_{‖u‖=‖v‖=1} var(uᵀ X v)`.
    pub fn lambda_max(&self) -> f64 {
        self.smoothness.max(self.sigma_hat)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.d == 0 || self.r == 0 || self.r > self.d {
            return bad(format!("need 1 <= r <= d (r = {}, d = {})", self.r, self.d));
        }
        if self.n() == 0 {
            return bad(format!("alpha = {} yields no samples", self.alpha));
        }
        if !(self.sigma_hat > 0.0) || !(self.smoothness >= self.sigma_hat) {
            return bad(format!(
                "need L >= sigma_hat > 0 (L = {}, sigma_hat = {})",
                self.smoothness, self.sigma_hat
            ));
        }
        if !(self.label_noise_std >= 0.0) || !(self.rho > 0.0) {
            return bad("label_noise_std must be >= 0 and rho > 0".into());
        }
        if let Some(w) = self.w_scale {
            // λ_max(Σ_w) <= λ_min(Σ_x)/4
            if !(0.0..=0.25).contains(&w) {
                return bad(format!("w_scale must lie in [0, 0.25], got {w}"));
            }
        }
        Ok(())
    }
}

/// `Θ* = (nuclear_norm/r) · U Vᵀ` with `U, V` random orthonormal `d × r` frames.
pub fn make_ground_truth<R: Rng + ?Sized>(
    d: usize,
    r: usize,
    nuclear_norm: f64,
    rng: &mut R,
) -> Result<GroundTruth> {
    if r == 0 || r > d {
        return Err(Error::InvalidArgument(format!("rank {r} must lie in 1..={d}")));
    }
    let u = orthonormal_frame(d, r, rng);
    let v = orthonormal_frame(d, r, rng);
    let s = nuclear_norm / r as f64;
    let theta = &u * &v.transpose() * s;
    Ok(GroundTruth {
        theta_star: ParamMatrix::from_dmatrix(&theta),
        rank: r,
        nuclear_norm,
    })
}

fn orthonormal_frame<R: Rng + ?Sized>(d: usize, r: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Generates the planted truth and the problem from `spec.seed`.
pub fn generate(spec: &GenSpec) -> Result<(GroundTruth, Problem)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = make_ground_truth(spec.d, spec.r, spec.rho, &mut rng)?;
    let problem = match spec.w_scale {
        Some(w) if w > 0.0 => generate_nonconvex(spec, &truth, &mut rng)?,
        _ => generate_convex(spec, &truth, &mut rng)?,
    };
    Ok((truth, problem))
}

pub fn generate_convex<R: Rng + ?Sized>(spec: &GenSpec, truth: &GroundTruth, rng: &mut R) -> Result<Problem> {
    spec.validate()?;
    let (designs, responses) = sample_designs(spec, truth, rng, None)?;
    let p = spec.d * spec.d;
    let n = responses.len();
    let top = top_gram_eigenvalue(&designs, n, p, rng);
    let constants = Constants {
        smoothness: top,
        component_smoothness: max_row_norm_sq(&designs, p),
        lower_smoothness: 0.0,
        rsc_sigma_hat: spec.lambda_min() / 2.0,
    };
    Problem::new(spec.d, designs, responses, None, constants)
}

pub fn generate_nonconvex<R: Rng + ?Sized>(
    spec: &GenSpec,
    truth: &GroundTruth,
    rng: &mut R,
) -> Result<Problem> {
    spec.validate()?;
    let w_scale = match spec.w_scale {
        Some(w) if w > 0.0 => w,
        _ => {
            return Err(Error::InvalidArgument(
                "non-convex generation needs w_scale > 0".into(),
            ))
        }
    };
    let w_var = w_scale * spec.sigma_hat;
    let (designs, responses) = sample_designs(spec, truth, rng, Some(w_var))?;
    let p = spec.d * spec.d;
    let n = responses.len();
    // Hessian ZᵀZ/n − w I has spectrum in [−w, λ_max(ZᵀZ/n) − w].
    let top = top_gram_eigenvalue(&designs, n, p, rng);
    let constants = Constants {
        smoothness: (top - w_var).max(w_var),
        component_smoothness: (max_row_norm_sq(&designs, p) - w_var).max(w_var),
        lower_smoothness: w_var,
        rsc_sigma_hat: spec.lambda_min() / 4.0,
    };
    Problem::new(spec.d, designs, responses, Some(vec![w_var; p]), constants)
}

/// Row-major designs (observed with noise of variance `w_var` when given)
/// and responses generated from the clean designs.
fn sample_designs<R: Rng + ?Sized>(
    spec: &GenSpec,
    truth: &GroundTruth,
    rng: &mut R,
    w_var: Option<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    truth.theta_star.check_shape(spec.d, spec.d)?;
    let p = spec.d * spec.d;
    let n = spec.n();
    let sd_first = spec.smoothness.sqrt();
    let sd_rest = spec.sigma_hat.sqrt();
    let mut designs = Vec::with_capacity(n * p);
    let mut responses = Vec::with_capacity(n);
    let mut x = vec![0.0; p];
    for _ in 0..n {
        for (k, xk) in x.iter_mut().enumerate() {
            let sd = if k == 0 { sd_first } else { sd_rest };
            *xk = sd * rng.sample::<f64, _>(StandardNormal);
        }
        let eps: f64 = rng.sample(StandardNormal);
        responses.push(dot(&x, truth.theta_star.as_slice()) + spec.label_noise_std * eps);
        if let Some(w) = w_var {
            let sd_w = w.sqrt();
            for xk in x.iter_mut() {
                *xk += sd_w * rng.sample::<f64, _>(StandardNormal);
            }
        }
        designs.extend_from_slice(&x);
    }
    Ok((designs, responses))
}

fn max_row_norm_sq(designs: &[f64], p: usize) -> f64 {
    designs
        .chunks(p)
        .map(|row| dot(row, row))
        .fold(0.0, f64::max)
}

/// `λ_max(XᵀX/n)` by power iteration.
fn top_gram_eigenvalue<R: Rng + ?Sized>(designs: &[f64], n: usize, p: usize, rng: &mut R) -> f64 {
    let mut v: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
    let nv = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut prev = 0.0;
    let mut lambda = 0.0;
    for it in 0..2000 {
        let mut next = vec![0.0; p];
        for row in designs.chunks(p) {
            axpy(&mut next, dot(row, &v) / n as f64, row);
        }
        lambda = dot(&next, &v);
        let nn = dot(&next, &next).sqrt();
        if nn == 0.0 {
            return 0.0;
        }
        next.iter_mut().for_each(|x| *x /= nn);
        v = next;
        if it > 0 && (lambda - prev).abs() <= 1e-12 * lambda {
            break;
        }
        prev = lambda;
    }
    lambda
}

/// Smallest eigenvalue of the loss Hessian `Γ̂ = ZᵀZ/n − Σ_w`, by power
/// iteration on the shifted matrix `s I − Γ̂` with `s` the smoothness bound.
pub fn hessian_min_eigenvalue<R: Rng + ?Sized>(problem: &Problem, max_iter: usize, rng: &mut R) -> f64 {
    let p = problem.dim() * problem.dim();
    let n = problem.n() as f64;
    let shift = problem.constants().smoothness + problem.constants().lower_smoothness;
    let w = problem.noise_cov();
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().map(|x| shift * x).collect();
        for row in problem.designs().chunks(p) {
            axpy(&mut out, -dot(row, v) / n, row);
        }
        if let Some(w) = w {
            for ((o, wi), vi) in out.iter_mut().zip(w).zip(v) {
                *o += wi * vi;
            }
        }
        out
    };
    let mut v: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
    let nv = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut mu = 0.0;
    let mut prev = 0.0;
    for it in 0..max_iter {
        let next = apply(&v);
        mu = dot(&next, &v);
        let nn = dot(&next, &next).sqrt();
        if nn == 0.0 {
            break;
        }
        v = next.into_iter().map(|x| x / nn).collect();
        if it > 0 && (mu - prev).abs() <= 1e-12 * mu.abs().max(1e-300) {
            break;
        }
        prev = mu;
    }
    shift - mu
}

/// First-order error `L_n(V) − L_n(U) − ⟨∇L_n(U), V − U⟩`.
pub fn first_order_error(problem: &Problem, u: &ParamMatrix, v: &ParamMatrix) -> Result<f64> {
    let mut scratch = CostLedger::new();
    let grad = problem.full_gradient(u, &mut scratch)?;
    let delta = v.sub(u);
    Ok(problem.objective(v)? - problem.objective(u)? - grad.dot(&delta))
}

/// Empirical check of the restricted strong convexity lower bound
/// `E(Δ) ≥ σ_c ‖Δ‖_F² − c·τ‖Δ‖_*²`, with `τ = ξ(Σ_x) d / n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RscMargin {
    pub pairs: usize,
    /// Curvature constant: `λ_min(Σ_x)/2` (convex) or `/4` (corrected loss).
    pub sigma_c: f64,
    /// `ξ(Σ_x) d / n`.
    pub tau_unit: f64,
    /// `(c, fraction of pairs satisfying the bound)`.
    pub satisfaction: Vec<(f64, f64)>,
    /// Smallest multiplier `c` for which every sampled pair satisfies the bound.
    pub fitted_c: f64,
    /// Margins `E(Δ) − σ_c‖Δ‖_F² + τ‖Δ‖_*²` at `c = 1`.
    pub margins: Vec<f64>,
}

pub const RSC_MULTIPLIERS: [f64; 3] = [1.0, 4.0, 16.0];

pub fn rsc_margin<R: Rng + ?Sized>(
    problem: &Problem,
    spec: &GenSpec,
    pairs: usize,
    rng: &mut R,
) -> Result<RscMargin> {
    if pairs == 0 {
        return Err(Error::InvalidArgument("rsc_margin needs at least one pair".into()));
    }
    let d = problem.dim();
    let sigma_c = match problem.kind() {
        crate::model::ProblemKind::Convex => spec.lambda_min() / 2.0,
        crate::model::ProblemKind::Nonconvex => spec.lambda_min() / 4.0,
    };
    let tau_unit = spec.lambda_max() * d as f64 / problem.n() as f64;
    let mut samples = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let u = random_feasible(d, spec.rho, rng)?;
        let v = random_feasible(d, spec.rho, rng)?;
        let e = first_order_error(problem, &u, &v)?;
        let delta = v.sub(&u);
        samples.push((e, delta.frobenius_norm_sq(), delta.nuclear_norm()?.powi(2)));
    }
    let satisfaction = RSC_MULTIPLIERS
        .iter()
        .map(|&c| {
            let ok = samples
                .iter()
                .filter(|(e, f2, n2)| e - sigma_c * f2 + c * tau_unit * n2 >= 0.0)
                .count();
            (c, ok as f64 / pairs as f64)
        })
        .collect();
    let fitted_c = samples
        .iter()
        .filter(|(_, _, n2)| *n2 > 0.0)
        .map(|(e, f2, n2)| (sigma_c * f2 - e) / (tau_unit * n2))
        .fold(0.0, f64::max);
    let margins = samples
        .iter()
        .map(|(e, f2, n2)| e - sigma_c * f2 + tau_unit * n2)
        .collect();
    Ok(RscMargin {
        pairs,
        sigma_c,
        tau_unit,
        satisfaction,
        fitted_c,
        margins,
    })
}

/// Random point of the ball: a Gaussian factorization of random rank,
/// rescaled to a uniformly drawn nuclear norm in `(0, ρ]`.
pub fn random_feasible<R: Rng + ?Sized>(d: usize, rho: f64, rng: &mut R) -> Result<ParamMatrix> {
    let k = rng.random_range(1..=d);
    let a = DMatrix::from_fn(d, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let b = DMatrix::from_fn(k, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let m = ParamMatrix::from_dmatrix(&(a * b));
    let norm = m.nuclear_norm()?;
    let target = rho * (1.0 - rng.random::<f64>());
    Ok(m.scaled(target / norm))
}

/// Result of the cone-membership diagnostic for an iterate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConeCheck {
    pub holds: bool,
    /// `rhs − lhs`; nonnegative exactly when the membership holds.
    pub slack: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Whether the reference sits on the boundary `‖θ̂‖_* = ρ`, which the bound assumes.
    pub boundary_ok: bool,
}

/// Checks `‖Δ̂‖_* ≤ 2φ‖Δ̂‖_F + 2‖Δ*‖_* + 2φ‖Δ*‖_F` with `Δ̂ = θ_t − θ̂`,
/// `Δ* = θ̂ − Θ*` and subspace compatibility `φ = √(2r)`.
pub fn cone_check(
    theta_t: &ParamMatrix,
    theta_ref: &ParamMatrix,
    truth: &GroundTruth,
    rho: f64,
) -> Result<ConeCheck> {
    let phi = (2.0 * truth.rank as f64).sqrt();
    let delta_hat = theta_t.sub(theta_ref);
    let delta_star = theta_ref.sub(&truth.theta_star);
    let lhs = delta_hat.nuclear_norm()?;
    let rhs = 2.0 * phi * delta_hat.frobenius_norm()
        + 2.0 * delta_star.nuclear_norm()?
        + 2.0 * phi * delta_star.frobenius_norm();
    let ref_norm = theta_ref.nuclear_norm()?;
    let boundary_ok = (ref_norm - rho).abs() <= 1e-6 * rho;
    if !boundary_ok {
        log::warn!("reference nuclear norm {ref_norm} is off the boundary rho = {rho}; cone bound is not guaranteed");
    }
    Ok(ConeCheck {
        holds: lhs <= rhs,
        slack: rhs - lhs,
        lhs,
        rhs,
        boundary_ok,
    })
}
