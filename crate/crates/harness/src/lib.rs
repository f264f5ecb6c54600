// negated comparisons are deliberate: they reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Experiment harness for the projection-free solvers: configuration,
//! certified reference optima, trace files, plots and diagnostics.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod io;
pub mod plot;
pub mod reference;

pub use config::{ExperimentConfig, SolverKind};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, run_solver, Instance};
pub use reference::{compute_reference, ReferenceCache, ReferenceSolution};
