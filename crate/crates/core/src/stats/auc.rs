use serde::{Deserialize, Serialize};

use super::{check_scores, sample_variance, StatsError};
use crate::thresholds::norm_sf;

/// Predictions of one model on the test set with its AUC influence values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedModel {
    pub scores: Vec<f64>,
    pub influence: Vec<f64>,
    pub auc_hat: f64,
}

impl EvaluatedModel {
    pub fn evaluate(scores: Vec<f64>, labels: &[bool]) -> Result<Self, StatsError> {
        let (auc_hat, influence) = auc_with_influence(&scores, labels)?;
        Ok(Self {
            scores,
            influence,
            auc_hat,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

struct ClassCounts {
    /// For each observation: negatives scored strictly below it (positives)
    /// or positives scored strictly above it (negatives).
    counts: Vec<usize>,
    positives: usize,
    negatives: usize,
}

fn strict_counts(scores: &[f64], labels: &[bool]) -> Result<ClassCounts, StatsError> {
    check_scores(scores, labels.len())?;
    let mut pos: Vec<f64> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    for (&s, &y) in scores.iter().zip(labels) {
        if y {
            pos.push(s)
        } else {
            neg.push(s)
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(StatsError::OneClass {
            positives: pos.len(),
            negatives: neg.len(),
        });
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let counts = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            if y {
                neg.partition_point(|&v| v < s)
            } else {
                pos.len() - pos.partition_point(|&v| v <= s)
            }
        })
        .collect();
    Ok(ClassCounts {
        counts,
        positives: pos.len(),
        negatives: neg.len(),
    })
}

/// Fraction of (positive, negative) pairs in which the positive scores
/// strictly higher. Ties count as 0.
pub fn empirical_auc(scores: &[f64], labels: &[bool]) -> Result<f64, StatsError> {
    let c = strict_counts(scores, labels)?;
    let wins: u64 = c
        .counts
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y)
        .map(|(&k, _)| k as u64)
        .sum();
    Ok(wins as f64 / (c.positives as f64 * c.negatives as f64))
}

fn auc_with_influence(scores: &[f64], labels: &[bool]) -> Result<(f64, Vec<f64>), StatsError> {
    let c = strict_counts(scores, labels)?;
    let n = labels.len() as f64;
    let (n1, n0) = (c.positives as f64, c.negatives as f64);
    let wins: u64 = c
        .counts
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y)
        .map(|(&k, _)| k as u64)
        .sum();
    let auc = wins as f64 / (n1 * n0);
    // Plug-in class rates: 1/p1 = n/n1 and 1/p0 = n/n0.
    let influence = c
        .counts
        .iter()
        .zip(labels)
        .map(|(&k, &y)| {
            if y {
                n / n1 * (k as f64 / n0 - auc)
            } else {
                n / n0 * (k as f64 / n1 - auc)
            }
        })
        .collect();
    Ok((auc, influence))
}

/// Per-observation influence values of the empirical AUC with every
/// population quantity replaced by its empirical counterpart.
pub fn auc_influence_values(scores: &[f64], labels: &[bool]) -> Result<Vec<f64>, StatsError> {
    auc_with_influence(scores, labels).map(|(_, phi)| phi)
}

/// One-sided test of `AUC(candidate) - AUC(baseline) <= delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AucDifference {
    pub estimate: f64,
    /// `(estimate - delta) / std_error`; `-inf` when the standard error is 0.
    pub z: f64,
    pub p_value: f64,
    pub std_error: f64,
}

pub fn auc_difference_test(
    candidate: &EvaluatedModel,
    baseline: &EvaluatedModel,
    delta: f64,
) -> Result<AucDifference, StatsError> {
    if candidate.len() != baseline.len() {
        return Err(StatsError::LengthMismatch {
            expected: baseline.len(),
            found: candidate.len(),
        });
    }
    let diffs: Vec<f64> = candidate
        .influence
        .iter()
        .zip(&baseline.influence)
        .map(|(a, b)| a - b)
        .collect();
    let n = diffs.len() as f64;
    let std_error = (sample_variance(&diffs) / n).sqrt();
    let estimate = candidate.auc_hat - baseline.auc_hat;
    if !(std_error > 0.0) {
        return Ok(AucDifference {
            estimate,
            z: f64::NEG_INFINITY,
            p_value: 1.0,
            std_error: 0.0,
        });
    }
    let z = (estimate - delta) / std_error;
    Ok(AucDifference {
        estimate,
        z,
        p_value: norm_sf(z),
        std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(bits: &[u8]) -> Vec<bool> {
        bits.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn perfect_separation() {
        assert_eq!(empirical_auc(&[0.2, 0.8, 0.5], &labels(&[0, 1, 0])).unwrap(), 1.0);
    }

    #[test]
    fn ties_count_zero() {
        assert_eq!(empirical_auc(&[0.5; 6], &labels(&[0, 1, 0, 1, 1, 0])).unwrap(), 0.0);
    }

    #[test]
    fn one_class_is_an_error() {
        assert!(matches!(
            empirical_auc(&[0.1, 0.2], &labels(&[1, 1])),
            Err(StatsError::OneClass { positives: 2, negatives: 0 })
        ));
        assert!(matches!(
            empirical_auc(&[0.1, f64::NAN], &labels(&[1, 0])),
            Err(StatsError::NonFiniteScore(1))
        ));
    }

    #[test]
    fn four_point_influence_by_hand() {
        let y = labels(&[0, 0, 1, 1]);
        let m = EvaluatedModel::evaluate(vec![0.1, 0.4, 0.35, 0.8], &y).unwrap();
        assert_eq!(m.auc_hat, 0.75);
        let expected = [0.5, -0.5, -0.5, 0.5];
        for (a, b) in m.influence.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let separated = auc_influence_values(&[0.1, 0.2, 0.7, 0.9], &y).unwrap();
        assert!(separated.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn identical_models_never_reject() {
        let y = labels(&[0, 1, 0, 1, 1, 0, 1]);
        let m = EvaluatedModel::evaluate(vec![0.1, 0.9, 0.3, 0.2, 0.8, 0.5, 0.6], &y).unwrap();
        let t = auc_difference_test(&m, &m, 0.0).unwrap();
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn unattainable_margin() {
        let y = labels(&[0, 1, 0, 1, 1, 0, 1, 0]);
        let a = EvaluatedModel::evaluate(vec![0.1, 0.9, 0.3, 0.2, 0.8, 0.5, 0.6, 0.7], &y).unwrap();
        let b = EvaluatedModel::evaluate(vec![0.9, 0.1, 0.3, 0.2, 0.8, 0.5, 0.6, 0.4], &y).unwrap();
        let t = auc_difference_test(&a, &b, 1.0).unwrap();
        assert!(t.p_value >= 0.5);
    }
}
