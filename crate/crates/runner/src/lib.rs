//! Configuration-driven runs of the chain model: single tasks, parameter
//! sweeps, reports and trajectory files.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod export;
pub mod report;
pub mod run;

pub use config::{Config, ConfigError, Task};
pub use report::{Check, Report};
pub use run::{run, run_task, RunOptions};
