//! Experiment runner for the `viscowave` toolkit.
//!
//! [`experiments::run_experiment`] maps a resolved config to named outputs;
//! [`cli`] adds flag parsing, the output directory and exit codes.

pub mod cli;
pub mod csv;
pub mod experiments;

pub use experiments::{run_experiment, Outcome, Report};
