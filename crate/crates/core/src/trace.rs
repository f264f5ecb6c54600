//! Per-epoch solver snapshots and the flat trace rows derived from them.

use crate::error::Result;
use crate::ledger::CostLedger;
use crate::matrix::ParamMatrix;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// State at the end of one outer epoch (epoch 0 is the starting point).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub outer_t: usize,
    pub theta: ParamMatrix,
    pub f_value: f64,
    /// Cumulative oracle costs at the end of the epoch.
    pub ledger: CostLedger,
    pub wall_ms: f64,
    /// Largest subsolver exit gap inside the epoch; NaN for projection methods.
    pub max_inner_gap: f64,
}

#[derive(Debug, Clone)]
pub struct SolverRun {
    pub theta: ParamMatrix,
    pub epochs: Vec<EpochRecord>,
}

/// A flat trace row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub outer_t: usize,
    pub f_value: f64,
    pub gap_to_ref: f64,
    #[serde(rename = "dist_to_star_F")]
    pub dist_to_star_f: f64,
    #[serde(rename = "dist_to_ref_F")]
    pub dist_to_ref_f: f64,
    pub cum_component_grads: u64,
    pub cum_full_grads: u64,
    pub cum_lo_calls: u64,
    pub cum_projections: u64,
    pub wall_ms: f64,
    pub max_inner_gap: f64,
}

/// Reference point used to annotate traces.
#[derive(Debug, Clone, Copy)]
pub struct Reference<'a> {
    pub theta: &'a ParamMatrix,
    pub f_value: f64,
}

impl SolverRun {
    /// Flattens the run into trace rows. Missing references yield NaN columns.
    pub fn trace(
        &self,
        reference: Option<Reference<'_>>,
        truth: Option<&ParamMatrix>,
    ) -> Result<Vec<TraceRecord>> {
        self.epochs
            .iter()
            .map(|e| {
                let (gap_to_ref, dist_to_ref_f) = match reference {
                    Some(r) => (e.f_value - r.f_value, e.theta.distance(r.theta)?),
                    None => (f64::NAN, f64::NAN),
                };
                let dist_to_star_f = match truth {
                    Some(t) => e.theta.distance(t)?,
                    None => f64::NAN,
                };
                Ok(TraceRecord {
                    outer_t: e.outer_t,
                    f_value: e.f_value,
                    gap_to_ref,
                    dist_to_star_f,
                    dist_to_ref_f,
                    cum_component_grads: e.ledger.component_grad_evals,
                    cum_full_grads: e.ledger.full_grad_passes,
                    cum_lo_calls: e.ledger.lo_calls,
                    cum_projections: e.ledger.projection_calls,
                    wall_ms: e.wall_ms,
                    max_inner_gap: e.max_inner_gap,
                })
            })
            .collect()
    }
}

pub(crate) struct Stopwatch(Instant);

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Stopwatch(Instant::now())
    }

    pub(crate) fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}
