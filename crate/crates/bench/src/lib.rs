//! Experiment harness for the conjugate gradient solvers of `rcg-core`.
//!
//! - [`suite`]: runs a grid of (problem instance, solver) pairs in parallel
//!   and collects one [`RunRecord`] per pair;
//! - [`profile`]: Dolan–Moré performance profiles over a record set;
//! - [`report`]: CSV / JSON-lines persistence and SVG step plots.

pub mod error;
pub mod profile;
pub mod report;
pub mod suite;

pub use error::{BenchError, Result};
pub use profile::{performance_profile, Metric, ProfileCurve};
pub use report::emit_report;
pub use suite::{run_suite, RunRecord, SolverSpec, SuiteConfig};
