//! High-precision reference optimum by certified projected gradient descent.

use crate::error::{HarnessError, Result};
use projfree_core::{CostLedger, NuclearBall, ParamMatrix, Problem, ProblemKind};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// Largest dimension for which a reference solve is attempted.
pub const MAX_REFERENCE_DIM: usize = 100;
pub const DEFAULT_MAX_ITERS: usize = 500_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub theta: ParamMatrix,
    pub f_value: f64,
    /// Wolfe gap of the full gradient at `theta`, using an exact SVD.
    /// For convex problems it bounds `f(theta) − min f`.
    pub certificate_gap: f64,
    /// Tolerance to apply when comparing against this reference.
    pub ref_tol: f64,
    pub iterations: usize,
}

/// `⟨∇f(θ), θ⟩ + ρ σ_max(∇f(θ))` with the top singular value from a dense SVD.
pub fn certified_gap(problem: &Problem, ball: &NuclearBall, theta: &ParamMatrix) -> Result<f64> {
    let g = problem.full_gradient(theta, &mut CostLedger::new())?;
    let sigma = g.singular_values()?.first().copied().unwrap_or(0.0);
    Ok(g.dot(theta) + ball.radius() * sigma)
}

/// Runs PGD with step `1/L` from the origin until the certified Wolfe gap is
/// at most `tol`. Non-convex instances get a further polish of ten times as
/// many iterations, and their final gap is reported as `ref_tol`.
pub fn compute_reference(problem: &Problem, ball: &NuclearBall, tol: f64) -> Result<ReferenceSolution> {
    compute_reference_with_budget(problem, ball, tol, DEFAULT_MAX_ITERS)
}

pub fn compute_reference_with_budget(
    problem: &Problem,
    ball: &NuclearBall,
    tol: f64,
    max_iters: usize,
) -> Result<ReferenceSolution> {
    let d = problem.dim();
    if d > MAX_REFERENCE_DIM {
        return Err(HarnessError::Guard(format!(
            "reference solve limited to d <= {MAX_REFERENCE_DIM}, got d = {d}"
        )));
    }
    if !(tol > 0.0) {
        return Err(HarnessError::Config(format!("reference tol must be positive, got {tol}")));
    }
    let step = 1.0 / problem.constants().smoothness;
    let mut ledger = CostLedger::new();
    let mut theta = ParamMatrix::zeros(d, d);
    let mut iterations = 0;
    let mut gap = certified_gap(problem, ball, &theta)?;
    while gap > tol {
        if iterations >= max_iters {
            return Err(HarnessError::Guard(format!(
                "reference PGD did not reach gap {tol:e} within {max_iters} iterations (gap {gap:e})"
            )));
        }
        pgd_step(problem, ball, &mut theta, step, &mut ledger)?;
        iterations += 1;
        gap = certified_gap(problem, ball, &theta)?;
    }
    let mut ref_tol = gap.max(0.0);
    if problem.kind() == ProblemKind::Nonconvex {
        for _ in 0..(10 * iterations).max(10) {
            pgd_step(problem, ball, &mut theta, step, &mut ledger)?;
        }
        iterations *= 11;
        gap = certified_gap(problem, ball, &theta)?;
        ref_tol = gap.abs().max(tol);
    }
    Ok(ReferenceSolution {
        f_value: problem.objective(&theta)?,
        theta,
        certificate_gap: gap,
        ref_tol,
        iterations,
    })
}

fn pgd_step(
    problem: &Problem,
    ball: &NuclearBall,
    theta: &mut ParamMatrix,
    step: f64,
    ledger: &mut CostLedger,
) -> Result<()> {
    let g = problem.full_gradient(theta, ledger)?;
    theta.axpy(-step, &g);
    *theta = ball.project(theta, ledger)?;
    Ok(())
}

/// Hex digest identifying `(problem, radius, tol)`.
pub fn instance_key(problem: &Problem, ball: &NuclearBall, tol: f64) -> String {
    let mut h = Sha256::new();
    h.update((problem.dim() as u64).to_le_bytes());
    h.update((problem.n() as u64).to_le_bytes());
    for v in problem.designs().iter().chain(problem.responses()) {
        h.update(v.to_le_bytes());
    }
    if let Some(w) = problem.noise_cov() {
        h.update(b"noise");
        for v in w {
            h.update(v.to_le_bytes());
        }
    }
    h.update(ball.radius().to_le_bytes());
    h.update(tol.to_le_bytes());
    hex::encode(h.finalize())
}

/// On-disk cache of reference solutions, keyed by [`instance_key`].
#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

pub const CACHE_ENV: &str = "PROJFREE_CACHE";

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Directory from `PROJFREE_CACHE`, else `fallback`.
    pub fn from_env_or(fallback: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) if !dir.is_empty() => Self::new(dir),
            _ => Self::new(fallback),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("ref-{key}.bin"))
    }

    /// Cached solution for this instance, if one exists and decodes cleanly.
    pub fn load(&self, problem: &Problem, ball: &NuclearBall, tol: f64) -> Result<Option<ReferenceSolution>> {
        let path = self.path_for(&instance_key(problem, ball, tol));
        if !path.exists() {
            return Ok(None);
        }
        let bytes = fs::read(&path).map_err(HarnessError::io(&path))?;
        let sol = decode(&bytes, problem.dim());
        if sol.is_none() {
            log::warn!("ignoring unreadable reference cache entry {}", path.display());
        }
        Ok(sol)
    }

    pub fn load_or_compute(&self, problem: &Problem, ball: &NuclearBall, tol: f64) -> Result<ReferenceSolution> {
        if let Some(sol) = self.load(problem, ball, tol)? {
            return Ok(sol);
        }
        let sol = compute_reference(problem, ball, tol)?;
        let path = self.path_for(&instance_key(problem, ball, tol));
        fs::create_dir_all(&self.dir).map_err(HarnessError::io(&self.dir))?;
        // unique per writer so concurrent solves of one instance cannot interleave
        let tmp = path.with_extension(format!("tmp.{}.{:?}", std::process::id(), std::thread::current().id()).replace(['(', ')'], ""));
        fs::write(&tmp, encode(&sol)).map_err(HarnessError::io(&tmp))?;
        fs::rename(&tmp, &path).map_err(HarnessError::io(&path))?;
        Ok(sol)
    }
}

const MAGIC: &[u8; 8] = b"PFREF001";

fn encode(sol: &ReferenceSolution) -> Vec<u8> {
    let mut out = Vec::with_capacity(48 + 8 * sol.theta.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(sol.theta.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(sol.iterations as u64).to_le_bytes());
    for v in [sol.f_value, sol.certificate_gap, sol.ref_tol] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in sol.theta.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode(bytes: &[u8], dim: usize) -> Option<ReferenceSolution> {
    let rest = bytes.strip_prefix(MAGIC.as_slice())?;
    let mut words = rest
        .chunks_exact(8)
        .map(|c| <[u8; 8]>::try_from(c).ok());
    let mut next = || words.next().flatten();
    let d = u64::from_le_bytes(next()?) as usize;
    if d != dim || rest.len() != 8 * (5 + d * d) {
        return None;
    }
    let iterations = u64::from_le_bytes(next()?) as usize;
    let f_value = f64::from_le_bytes(next()?);
    let certificate_gap = f64::from_le_bytes(next()?);
    let ref_tol = f64::from_le_bytes(next()?);
    let data: Option<Vec<f64>> = (0..d * d).map(|_| next().map(f64::from_le_bytes)).collect();
    Some(ReferenceSolution {
        theta: ParamMatrix::from_vec(d, d, data?).ok()?,
        f_value,
        certificate_gap,
        ref_tol,
        iterations,
    })
}
