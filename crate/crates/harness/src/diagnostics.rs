//! The `check` report: restricted strong convexity margins and cone
//! membership of the CGS iterates.

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{cgs_config, obtain_reference, Instance};
use projfree_core::cgs::run_cgs;
use projfree_core::matreg::{cone_check, rsc_margin, ConeCheck, RscMargin};
use projfree_core::CostLedger;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::Path;

pub const DEFAULT_RSC_PAIRS: usize = 200;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    pub rsc: RscSummary,
    /// One entry per CGS outer iterate, starting at `θ₀`.
    pub cone: Vec<ConeCheck>,
    pub cone_holds_everywhere: bool,
}

/// [`RscMargin`] without the per-pair margins.
#[derive(Debug, Clone, Serialize)]
pub struct RscSummary {
    pub pairs: usize,
    pub sigma_c: f64,
    pub tau_unit: f64,
    pub satisfaction: Vec<(f64, f64)>,
    pub fitted_c: f64,
    pub min_margin: f64,
}

impl From<&RscMargin> for RscSummary {
    fn from(m: &RscMargin) -> Self {
        Self {
            pairs: m.pairs,
            sigma_c: m.sigma_c,
            tau_unit: m.tau_unit,
            satisfaction: m.satisfaction.clone(),
            fitted_c: m.fitted_c,
            min_margin: m.margins.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// Runs both diagnostics on the instance of run index `index`.
pub fn run_check(cfg: &ExperimentConfig, index: usize, pairs: usize, cache: &Path) -> Result<CheckReport> {
    let seed = cfg.derived_seed(index);
    let inst = Instance::generate(&cfg.gen_spec(index))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let rsc = rsc_margin(&inst.problem, &inst.spec, pairs, &mut rng)?;
    let reference = obtain_reference(&cfg.reference, &inst, cache)?;
    let tag = |source| HarnessError::Solver {
        solver: "cgs".into(),
        seed,
        source,
    };
    let c = cgs_config(&inst, cfg, seed).map_err(tag)?;
    let run = run_cgs(&inst.problem, &inst.ball, &c, &mut CostLedger::new()).map_err(tag)?;
    let cone = run
        .epochs
        .iter()
        .map(|e| cone_check(&e.theta, &reference.theta, &inst.truth, inst.spec.rho))
        .collect::<projfree_core::Result<Vec<_>>>()?;
    Ok(CheckReport {
        seed: cfg.seeds[index],
        d: inst.problem.dim(),
        n: inst.problem.n(),
        rsc: RscSummary::from(&rsc),
        cone_holds_everywhere: cone.iter().all(|c| c.holds),
        cone,
    })
}
