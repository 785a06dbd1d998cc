//! Batch front-end for `optrec-core`: one JSON config describes one run.

pub mod config;
pub mod run;

pub use config::{Problem, ProblemConfig, ProblemKind};
pub use run::{run, Command, Failure, RunOptions};
