//! Experiment harness: scenario files in, comparison tables out.
//!
//! A scenario file describes one cell (nodes, MTU, capacity, regime), the
//! MAC constants, run controls, and which engines to run. [`run_experiment`]
//! executes the analytic formulas and/or the simulators over each arrival-rate
//! row and joins everything into a [`report::ComparisonTable`].

pub mod report;
pub mod runner;
pub mod spec;

pub use report::{emit_report, ComparisonTable, ReportFormat};
pub use runner::run_experiment;
pub use spec::{load_spec, Engine, ExperimentSpec, HarnessError, RunControls};
