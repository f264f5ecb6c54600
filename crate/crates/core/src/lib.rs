// negated comparisons are deliberate: they reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Projection-free optimization over nuclear-norm balls.
//!
//! Conditional gradient sliding ([`cgs`]) and its variance-reduced stochastic
//! variant ([`storc`]) solve `min_{‖Θ‖_* ≤ ρ} (1/n) Σ f_i(Θ)` using only full or
//! component gradients and a linear minimization oracle over the ball. The
//! [`baselines`] module provides projected gradient descent and projected SVRG
//! for comparison, and [`matreg`] generates convex and errors-in-variables
//! matrix regression instances.

pub mod baselines;
pub mod cgs;
pub mod error;
pub mod fw_subsolver;
pub mod ledger;
pub mod matreg;
pub mod matrix;
pub mod model;
pub mod nuclear_ball;
pub mod storc;
pub mod trace;

pub use error::{Error, Result};
pub use ledger::CostLedger;
pub use matrix::ParamMatrix;
pub use model::{Constants, Problem, ProblemKind};
pub use nuclear_ball::NuclearBall;
pub use trace::{EpochRecord, SolverRun, TraceRecord};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
