//! Runs solvers on generated instances and writes traces plus a manifest.

use crate::config::{ExperimentConfig, ReferencePolicy, SolverKind};
use crate::error::{HarnessError, Result};
use crate::io::{self, CSV_HEADER};
use crate::reference::{instance_key, ReferenceCache, ReferenceSolution, CACHE_ENV};
use projfree_core::baselines::{pgd_step_size, run_pgd, run_svrg, svrg_step_size, BaselineConfig};
use projfree_core::cgs::{inner_steps, run_cgs, schedule, CgsConfig};
use projfree_core::matreg::{generate, GenSpec, GroundTruth};
use projfree_core::storc::{minibatch_size, run_storc, ConvexityMode, StorcConfig};
use projfree_core::trace::Reference;
use projfree_core::{CostLedger, NuclearBall, ParamMatrix, Problem, ProblemKind, SolverRun, TraceRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

/// Conventions in effect for every run, recorded in the manifest.
pub const DECISIONS: &[(&str, &str)] = &[
    ("reference", "projected gradient descent with step 1/L from the origin, stopped on the full-gradient Wolfe gap computed with a dense SVD; non-convex instances polished for 10x the iterations"),
    ("smoothness", "L used by every schedule is the largest eigenvalue of the empirical design covariance; component_smoothness is max_i ||X_i||_F^2"),
    ("sigma_hat", "schedules use rsc_sigma_hat = lambda_min(Sigma_x)/2 (convex) or /4 (corrected loss)"),
    ("delta0", "default f(theta0) minus a certified lower bound: 0 for the convex loss, -0.5 max(Sigma_w) rho^2 for the corrected loss"),
    ("theta0", "zero matrix"),
    ("linear_oracle", "block power iteration with Rayleigh-Ritz, block 8, relative tol 1e-10, at most max(10 d, 1000) sweeps, one restart"),
    ("projection", "dense SVD followed by sorting-based l1-ball projection of the singular values"),
    ("storc_anchor", "the anchor full gradient is skipped in epochs whose minibatch is >= n, which then use exact gradients"),
    ("storc_sampling", "indices drawn uniformly with replacement from stream 1 of the run seed; the oracle uses stream 0"),
    ("svrg", "default step 1/(10 component_smoothness), epoch length 2n, output = last iterate"),
    ("wall_ms", "written as 0 unless record_wall_time is set"),
    ("seeds", "run i uses generator.seed xor seeds[i] for the instance and every solver stream"),
];

/// A generated problem together with its constraint set.
#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: GenSpec,
    pub problem: Problem,
    pub truth: GroundTruth,
    pub ball: NuclearBall,
}

impl Instance {
    pub fn generate(spec: &GenSpec) -> Result<Self> {
        let (truth, problem) = generate(spec)?;
        Self::from_parts(spec.clone(), problem, truth)
    }

    pub fn from_parts(spec: GenSpec, problem: Problem, truth: GroundTruth) -> Result<Self> {
        let ball = NuclearBall::new(spec.rho, problem.dim())?;
        Ok(Self {
            spec,
            problem,
            truth,
            ball,
        })
    }

    pub fn zero(&self) -> ParamMatrix {
        let d = self.problem.dim();
        ParamMatrix::zeros(d, d)
    }
}

/// Fetches the reference according to `policy`. `compute` goes through the
/// cache in `PROJFREE_CACHE`, falling back to `fallback_cache`.
pub fn obtain_reference(policy: &ReferencePolicy, inst: &Instance, fallback_cache: &Path) -> Result<ReferenceSolution> {
    match policy {
        ReferencePolicy::Compute { tol } => {
            ReferenceCache::from_env_or(fallback_cache).load_or_compute(&inst.problem, &inst.ball, *tol)
        }
        ReferencePolicy::Load { dir, tol } => ReferenceCache::new(dir)
            .load(&inst.problem, &inst.ball, *tol)?
            .ok_or_else(|| {
                HarnessError::Config(format!(
                    "reference.dir: no cached reference {} in {}",
                    instance_key(&inst.problem, &inst.ball, *tol),
                    dir.display()
                ))
            }),
    }
}

pub fn cgs_config(inst: &Instance, cfg: &ExperimentConfig, seed: u64) -> projfree_core::Result<CgsConfig> {
    let mut c = CgsConfig::for_problem(&inst.problem, &inst.ball, inst.zero(), cfg.cgs.outer_iters, seed)?;
    if let Some(d0) = cfg.cgs.delta0 {
        c.delta0 = d0;
    }
    c.gap_tol = cfg.cgs.gap_tol;
    Ok(c)
}

pub fn storc_config(inst: &Instance, cfg: &ExperimentConfig, seed: u64) -> projfree_core::Result<StorcConfig> {
    let mut base = CgsConfig::for_problem(&inst.problem, &inst.ball, inst.zero(), cfg.storc.outer_iters, seed)?;
    if let Some(d0) = cfg.storc.delta0 {
        base.delta0 = d0;
    }
    base.gap_tol = cfg.storc.gap_tol;
    let mode = match inst.problem.kind() {
        ProblemKind::Convex => ConvexityMode::ComponentConvex,
        ProblemKind::Nonconvex => ConvexityMode::ComponentNonconvex,
    };
    let mut s = StorcConfig::new(base, inst.problem.constants().lower_smoothness, mode);
    s.scale_minibatch = cfg.storc.scale_minibatch;
    Ok(s)
}

pub fn pgd_config(inst: &Instance, cfg: &ExperimentConfig) -> BaselineConfig {
    let mut b = BaselineConfig::new(inst.zero(), cfg.pgd.iters);
    b.step_size = cfg.pgd.step_size;
    b
}

pub fn svrg_config(inst: &Instance, cfg: &ExperimentConfig) -> BaselineConfig {
    let mut b = BaselineConfig::new(inst.zero(), cfg.svrg.iters);
    b.step_size = cfg.svrg.step_size;
    b.svrg_epoch_len = cfg.svrg.epoch_len;
    b.svrg_batch = cfg.svrg.batch;
    b
}

/// Sampling stream for the stochastic solvers; stream 0 of the same seed
/// drives the linear oracle.
pub fn sampling_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Everything produced by one `(solver, seed)` run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub solver: SolverKind,
    pub seed: u64,
    pub run: SolverRun,
    pub ledger: CostLedger,
    pub rows: Vec<TraceRecord>,
    /// Schedule and step values actually used.
    pub settings: Value,
}

/// Runs one solver on one instance. Core failures are tagged with the solver and seed.
pub fn run_solver(
    inst: &Instance,
    solver: SolverKind,
    cfg: &ExperimentConfig,
    seed: u64,
    reference: &ReferenceSolution,
) -> Result<RunOutcome> {
    let tag = |source: projfree_core::Error| HarnessError::Solver {
        solver: solver.name().into(),
        seed,
        source,
    };
    let p = &inst.problem;
    let mut ledger = CostLedger::new();
    let (run, settings) = match solver {
        SolverKind::Cgs => {
            let c = cgs_config(inst, cfg, seed).map_err(tag)?;
            let run = run_cgs(p, &inst.ball, &c, &mut ledger).map_err(tag)?;
            (run, sliding_settings(&c, None))
        }
        SolverKind::Storc => {
            let c = storc_config(inst, cfg, seed).map_err(tag)?;
            let run = run_storc(p, &inst.ball, &c, &mut ledger, &mut sampling_rng(seed)).map_err(tag)?;
            (run, sliding_settings(&c.base, Some((&c, p.n()))))
        }
        SolverKind::Pgd => {
            let c = pgd_config(inst, cfg);
            let run = run_pgd(p, &inst.ball, &c, &mut ledger).map_err(tag)?;
            (run, json!({ "iters": c.iters, "step_size": pgd_step_size(p, &c) }))
        }
        SolverKind::Svrg => {
            let c = svrg_config(inst, cfg);
            let run = run_svrg(p, &inst.ball, &c, &mut ledger, &mut sampling_rng(seed)).map_err(tag)?;
            let settings = json!({
                "iters": c.iters,
                "step_size": svrg_step_size(p, &c),
                "epoch_len": c.svrg_epoch_len.unwrap_or(2 * p.n()),
                "batch": c.svrg_batch,
            });
            (run, settings)
        }
    };
    let mut rows = run
        .trace(
            Some(Reference {
                theta: &reference.theta,
                f_value: reference.f_value,
            }),
            Some(&inst.truth.theta_star),
        )
        .map_err(tag)?;
    if !cfg.record_wall_time {
        rows.iter_mut().for_each(|r| r.wall_ms = 0.0);
    }
    Ok(RunOutcome {
        solver,
        seed,
        run,
        ledger,
        rows,
        settings,
    })
}

fn sliding_settings(c: &CgsConfig, storc: Option<(&StorcConfig, usize)>) -> Value {
    let n_t = inner_steps(c.smoothness, c.sigma_hat);
    let first = schedule(c, 1, 1);
    let mut v = json!({
        "outer_iters": c.outer_iters,
        "smoothness": c.smoothness,
        "sigma_hat": c.sigma_hat,
        "delta0": c.delta0,
        "inner_steps": n_t,
        "eta_1_1": first.eta,
        "gap_tol": c.gap_tol,
    });
    if let Some((s, n)) = storc {
        let m = minibatch_size(s, n_t);
        v["lower_smoothness"] = json!(s.lower_smoothness);
        v["effective_smoothness"] = json!(s.effective_smoothness());
        v["scale_minibatch"] = json!(s.scale_minibatch);
        v["minibatch"] = json!(m);
        v["full_gradient_bypass"] = json!(m >= n);
    }
    v
}

#[derive(Debug, Clone, Serialize)]
struct ReferenceSummary {
    key: String,
    f_value: f64,
    certificate_gap: f64,
    ref_tol: f64,
    iterations: usize,
}

/// Paths written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub csvs: Vec<PathBuf>,
    pub manifest: PathBuf,
}

pub fn csv_name(solver: SolverKind, seed: u64) -> String {
    format!("{solver}_seed{seed}.csv")
}

/// For each seed: generates the instance, obtains the reference and runs every
/// configured solver, writing one CSV per `(solver, seed)` and `manifest.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    cfg.check_files()?;
    fs::create_dir_all(&cfg.out_dir).map_err(HarnessError::io(&cfg.out_dir))?;
    let fallback_cache = cfg.out_dir.join("refcache");
    let mut csvs = Vec::new();
    let mut runs = Vec::new();
    for (i, &seed) in cfg.seeds.iter().enumerate() {
        let spec = cfg.gen_spec(i);
        let inst = Instance::generate(&spec)?;
        let reference = obtain_reference(&cfg.reference, &inst, &fallback_cache)?;
        let ref_summary = ReferenceSummary {
            key: instance_key(&inst.problem, &inst.ball, cfg.reference.tol()),
            f_value: reference.f_value,
            certificate_gap: reference.certificate_gap,
            ref_tol: reference.ref_tol,
            iterations: reference.iterations,
        };
        for &solver in &cfg.solvers {
            let out = run_solver(&inst, solver, cfg, spec.seed, &reference)?;
            let name = csv_name(solver, seed);
            let path = cfg.out_dir.join(&name);
            io::write_trace(&path, &out.rows)?;
            log::info!("{solver} seed {seed}: wrote {}", path.display());
            runs.push(json!({
                "solver": solver,
                "seed": seed,
                "derived_seed": spec.seed,
                "csv": name,
                "instance": {
                    "d": inst.problem.dim(),
                    "n": inst.problem.n(),
                    "kind": inst.problem.kind(),
                    "constants": inst.problem.constants(),
                    "truth_rank": inst.truth.rank,
                    "truth_nuclear_norm": inst.truth.nuclear_norm,
                },
                "reference": ref_summary,
                "settings": out.settings,
                "final_ledger": out.ledger,
            }));
            csvs.push(path);
        }
    }
    let decisions: serde_json::Map<String, Value> =
        DECISIONS.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": projfree_core::VERSION,
        "csv_header": CSV_HEADER,
        "reference_cache_env": CACHE_ENV,
        "config": cfg,
        "decisions": decisions,
        "runs": runs,
    });
    let manifest_path = cfg.out_dir.join("manifest.json");
    fs::write(&manifest_path, io::to_json(&manifest)?).map_err(HarnessError::io(&manifest_path))?;
    Ok(ExperimentOutput {
        csvs,
        manifest: manifest_path,
    })
}
