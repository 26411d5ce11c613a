//! Experiment harness: configuration, seeded random streams, training and
//! evaluation loops, parameter sweeps, the synthetic Pareto-front demo and
//! CSV output.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod config;
pub mod demo;
pub mod eval;
pub mod output;
pub mod rng;
pub mod sweep;
pub mod train;

pub use config::RunConfig;
pub use demo::{cmd_pareto_demo, DemoShape};
pub use eval::{cmd_eval, evaluate_greedy, evaluate_random, EvalSummary};
pub use sweep::{cmd_sweep, SweepGrid, SweepRow};
pub use train::{cmd_train, train, EpisodeRecord, TrainOutput};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Learner(#[from] crate::learner::LearnerError),
    #[error(transparent)]
    Fuzzy(#[from] crate::fuzzy::FuzzyError),
    #[error(transparent)]
    Pareto(#[from] crate::pareto::ParetoError),
    #[error("front check failed: {0}")]
    FrontMismatch(String),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
