//! Config-driven experiments: each run trains the shadow ensemble once, then
//! draws a fresh honest dataset and target model per repetition and scores
//! the attack against the known truth.

mod config;
mod report;
mod runner;

pub use config::{axis_key, format_split, parse_kv, parse_split, CsvSource, DataSource, ExperimentConfig, Family};
pub use report::{ci_half_width, emit_report, read_result, render_csv, render_text, write_result, write_timing, ExperimentResult, Outcome};
pub use runner::{attack_model, prepare, run_experiment, run_sweep, train_target, PreparedExperiment, RemoteVerdict};

use thiserror::Error;

use crate::attack::AttackError;
use crate::data::DataError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error("{failed} of {total} repetitions failed (limit 5%)")]
    RuntimeFailures { failed: usize, total: usize },
    #[error("{0}")]
    Io(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 when the failure
    /// threshold is exceeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::UnknownAxis(_) => 2,
            HarnessError::RuntimeFailures { .. } | HarnessError::Attack(AttackError::TooManyFailures { .. }) => 3,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
