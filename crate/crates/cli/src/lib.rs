//! Experiment harness for event-driven decision-level fusion: synthetic
//! scenario generation, report/label file formats, metric computation and
//! the `evfuse` command-line interface.

pub mod cli;
pub mod error;
pub mod io;
pub mod metrics;
pub mod runner;
pub mod scenario;
