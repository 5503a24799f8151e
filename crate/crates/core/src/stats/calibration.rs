use serde::{Deserialize, Serialize};

use super::auc::{auc_difference_test, AucDifference, EvaluatedModel};
use super::{check_scores, sample_variance, StatsError};
use crate::thresholds::norm_sf;

/// Two one-sided tests that the mean residual `score - label` lies inside `(-eps, eps)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTest {
    pub mean_residual: f64,
    pub std_error: f64,
    /// Tests the null `mean <= -eps`.
    pub p_lower: f64,
    /// Tests the null `mean >= eps`.
    pub p_upper: f64,
}

pub fn calibration_band_test(scores: &[f64], labels: &[bool], eps: f64) -> Result<CalibrationTest, StatsError> {
    if !(eps > 0.0) {
        return Err(StatsError::InvalidEpsilon(eps));
    }
    check_scores(scores, labels.len())?;
    if scores.is_empty() {
        return Err(StatsError::Empty);
    }
    let residuals: Vec<f64> = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| s - if y { 1.0 } else { 0.0 })
        .collect();
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let std_error = (sample_variance(&residuals) / n).sqrt();
    let (p_lower, p_upper) = if std_error > 0.0 {
        (norm_sf((mean + eps) / std_error), norm_sf((eps - mean) / std_error))
    } else {
        (
            if mean > -eps { 0.0 } else { 1.0 },
            if mean < eps { 0.0 } else { 1.0 },
        )
    };
    Ok(CalibrationTest {
        mean_residual: mean,
        std_error,
        p_lower,
        p_upper,
    })
}

/// Lower calibration side, upper calibration side, then AUC improvement,
/// each tested at the full level once the previous one is rejected.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeTest {
    pub calibration: CalibrationTest,
    pub auc: AucDifference,
    /// Largest stage p-value; comparing it to a threshold reproduces the gatekept decision.
    pub effective_p: f64,
}

impl CompositeTest {
    /// Runs the gatekeeping sequence at threshold `c`.
    pub fn rejects(&self, c: f64) -> bool {
        [self.calibration.p_lower, self.calibration.p_upper, self.auc.p_value]
            .iter()
            .all(|&p| p <= c)
    }
}

pub fn composite_test(
    candidate: &EvaluatedModel,
    baseline: &EvaluatedModel,
    labels: &[bool],
    delta: f64,
    eps: f64,
) -> Result<CompositeTest, StatsError> {
    let calibration = calibration_band_test(&candidate.scores, labels, eps)?;
    let auc = auc_difference_test(candidate, baseline, delta)?;
    let effective_p = calibration.p_lower.max(calibration.p_upper).max(auc.p_value);
    Ok(CompositeTest {
        calibration,
        auc,
        effective_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_residual_is_inside_band() {
        // Residuals +-0.3 with mean 0 and n = 500.
        let labels: Vec<bool> = (0..500).map(|i| i % 2 == 0).collect();
        let scores: Vec<f64> = labels.iter().map(|&y| if y { 0.7 } else { 0.3 }).collect();
        let t = calibration_band_test(&scores, &labels, 0.05).unwrap();
        assert!(t.mean_residual.abs() < 1e-12);
        assert!(t.p_lower < 0.01 && t.p_upper < 0.01);
        let z = 0.05 / t.std_error;
        assert!((t.p_upper - norm_sf(z)).abs() < 1e-15);
    }

    #[test]
    fn boundary_mean_gives_half() {
        let labels = vec![true, false, true, false];
        let scores = vec![0.85, 0.25, 0.65, 0.45];
        let t = calibration_band_test(&scores, &labels, 0.05).unwrap();
        assert!((t.mean_residual - 0.05).abs() < 1e-12);
        assert!((t.p_upper - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_variance_conventions() {
        let labels = vec![false; 4];
        let t = calibration_band_test(&[0.01; 4], &labels, 0.05).unwrap();
        assert_eq!((t.p_lower, t.p_upper), (0.0, 0.0));
        let t = calibration_band_test(&[0.5; 4], &labels, 0.05).unwrap();
        assert_eq!((t.p_lower, t.p_upper), (0.0, 1.0));
        assert!(calibration_band_test(&[0.5; 4], &labels, 0.0).is_err());
    }

    #[test]
    fn gross_miscalibration_blocks_composite() {
        let labels: Vec<bool> = (0..200).map(|i| i % 3 == 0).collect();
        let base_scores: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        let good: Vec<f64> = labels.iter().map(|&y| if y { 0.9 } else { 0.1 }).collect();
        let shifted: Vec<f64> = good.iter().map(|s| (s + 0.5f64).min(1.0)).collect();
        let base = EvaluatedModel::evaluate(base_scores, &labels).unwrap();
        let cand = EvaluatedModel::evaluate(shifted, &labels).unwrap();
        let t = composite_test(&cand, &base, &labels, 0.0, 0.05).unwrap();
        assert!(t.effective_p >= t.calibration.p_upper);
        assert!(t.calibration.p_upper > 0.99);
        assert!(!t.rejects(0.1));
    }

    #[test]
    fn identical_calibrated_model_has_unit_p() {
        let labels = vec![true, false, true, false, false, true];
        let scores = vec![0.6, 0.4, 0.55, 0.45, 0.5, 0.5];
        let m = EvaluatedModel::evaluate(scores, &labels).unwrap();
        let t = composite_test(&m, &m, &labels, 0.0, 0.05).unwrap();
        assert_eq!(t.effective_p, 1.0);
    }
}
