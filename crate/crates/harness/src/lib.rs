//! Seeded Monte Carlo CCDF experiments on top of `stace`.
//!
//! A run draws `frames` transmissions. The bits of symbol block `b` come from
//! a ChaCha8 stream keyed by `(seed, b)`, so every transmission is
//! reproducible on its own and results do not depend on the worker count.

pub mod compare;
pub mod config;
pub mod output;
pub mod runner;

pub use compare::{compare_runs, ComparisonRow};
pub use config::{Coding, ConstellationKind, ExperimentConfig, Method, PartialConfig, ThresholdGrid, ValidationError};
pub use runner::{run_experiment, run_experiment_with, Pipeline, RunOptions, RunReport};
