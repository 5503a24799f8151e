//! Approval sessions: one approve/deny bit per submitted model, with every
//! internal quantity kept in an append-only audit log.

pub mod audit;
pub mod config;
pub mod report;
mod session;

pub use audit::{read_audit_log, scores_digest, ApprovalRecord, AuditEntry, AuditHeader};
pub use config::{ConfigError, HypothesisSettings, SessionConfig, WeightSettings};
pub use report::{Report, ReportRow};
pub use session::{
    derive_seed, ApprovalSession, FilePrespecSource, PrespecSource, SessionInputs, SessionStatus,
};

use thiserror::Error;

use crate::graph::GraphError;
use crate::stats::StatsError;
use crate::thresholds::ThresholdError;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("session exhausted: all {0} tests have been used")]
    Exhausted(usize),
    #[error("submission has {found} scores but the test set has {expected} rows")]
    Misaligned { expected: usize, found: usize },
    #[error("prespecified updates: {0}")]
    Prespecified(String),
    #[error("corrupt audit log: {0}")]
    CorruptLog(String),
    #[error("audit log step {0}: stored digest does not match the stored scores")]
    DigestMismatch(usize),
    #[error("audit log step {0}: replayed decision differs from the recorded one")]
    DecisionMismatch(usize),
    #[error("audit log was written for a different {0}")]
    InputMismatch(&'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    Stats(StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<StatsError> for SessionError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::Io(io) => SessionError::Io(io),
            StatsError::LengthMismatch { expected, found } => SessionError::Misaligned { expected, found },
            other => SessionError::Stats(other),
        }
    }
}
