//! Test statistics: empirical AUC with influence values, AUC difference
//! tests, calibration-in-the-large band tests, the gatekept composite test and
//! correlation estimates between model statistics.

mod auc;
mod calibration;
mod correlation;
mod dataset;

pub use auc::{auc_difference_test, auc_influence_values, empirical_auc, AucDifference, EvaluatedModel};
pub use calibration::{calibration_band_test, composite_test, CalibrationTest, CompositeTest};
pub use correlation::{correlation_matrix, statistic_correlation, CorrelationEstimate};
pub use dataset::{read_predictions, TestDataset};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("both outcome classes must be present (found {positives} positives and {negatives} negatives)")]
    OneClass { positives: usize, negatives: usize },
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("score at row {0} is not finite")]
    NonFiniteScore(usize),
    #[error("calibration half-width must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("dataset has no `label` column")]
    MissingLabelColumn,
    #[error("row {row}: label `{value}` is not 0 or 1")]
    InvalidLabel { row: usize, value: String },
    #[error("row {row}: cannot parse `{value}` as a number")]
    InvalidNumber { row: usize, value: String },
    #[error("need at least one statistic")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Null hypothesis family tested at each submission.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisKind {
    /// Candidate AUC exceeds baseline AUC by more than the margin.
    AucImprovement,
    /// Mean residual lies strictly inside the calibration band.
    CalibrationBand,
    /// Both calibration sides, then the AUC improvement, in a gatekept sequence.
    Composite,
}

fn check_scores(scores: &[f64], n: usize) -> Result<(), StatsError> {
    if scores.len() != n {
        return Err(StatsError::LengthMismatch {
            expected: n,
            found: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(StatsError::NonFiniteScore(i));
    }
    Ok(())
}

/// Sample variance with denominator `n - 1`; 0 for fewer than two values.
pub(crate) fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}
