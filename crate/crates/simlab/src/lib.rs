//! Simulation studies for sequential model approval: a synthetic logistic
//! population, an adversarial overfitting developer, an honest refitting
//! developer with a power gate, and a replicate runner that reports
//! family-wise error and power per policy.

pub mod developer;
pub mod model;
pub mod output;
pub mod population;
pub mod runner;
pub mod scenario;

use srgp::stats::StatsError;
use srgp::SessionError;
use thiserror::Error;

pub use developer::{adversarial_prespecified, AdversarialDeveloper, GateSettings, RefitPath, TickFit};
pub use model::{fit_logistic, FitError, FitSettings, LinearModel};
pub use output::write_outputs;
pub use population::{generate_population, true_auc, true_calibration_error, PopulationSpec, Sample};
pub use runner::{run_scenario, PolicySummary, ReplicateResult, ScenarioResult};
pub use scenario::{ScenarioConfig, ScenarioKind};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("model fit failed: {0}")]
    Fit(#[from] FitError),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
