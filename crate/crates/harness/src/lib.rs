//! Scenario configuration, Monte-Carlo trials and sweeps, and the
//! `rfi-cancel` command line built on `rfi-core`.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod sweep;
pub mod trial;

pub use config::ScenarioConfig;
pub use error::{HarnessError, Result};
pub use sweep::{run_sweep, SweepReport};
pub use trial::{run_trial, synthesize, TrialRow, TrialSignals};
