use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign};

/// Oracle cost counters.
///
/// Every solver threads one of these through its oracle calls so that
/// gradient and linear-oracle complexity can be read off exactly after a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostLedger {
    pub component_grad_evals: u64,
    pub full_grad_passes: u64,
    pub lo_calls: u64,
    pub projection_calls: u64,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds the counts of a sub-ledger (e.g. one concurrent lane) into this one.
    pub fn merge(&mut self, other: &CostLedger) {
        *self += *other;
    }

    /// Field-wise difference `self - earlier`; `earlier` must be a prior snapshot.
    pub fn since(&self, earlier: &CostLedger) -> CostLedger {
        CostLedger {
            component_grad_evals: self.component_grad_evals - earlier.component_grad_evals,
            full_grad_passes: self.full_grad_passes - earlier.full_grad_passes,
            lo_calls: self.lo_calls - earlier.lo_calls,
            projection_calls: self.projection_calls - earlier.projection_calls,
        }
    }
}

impl Add for CostLedger {
    type Output = CostLedger;

    fn add(mut self, rhs: CostLedger) -> CostLedger {
        self += rhs;
        self
    }
}

impl AddAssign for CostLedger {
    fn add_assign(&mut self, rhs: CostLedger) {
        self.component_grad_evals += rhs.component_grad_evals;
        self.full_grad_passes += rhs.full_grad_passes;
        self.lo_calls += rhs.lo_calls;
        self.projection_calls += rhs.projection_calls;
    }
}
