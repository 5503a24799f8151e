//! Synthetic population: Gaussian features and logistic labels.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use srgp::stats::empirical_auc;
use srgp::TestDataset;

use crate::model::LinearModel;
use crate::SimError;

/// Observations in the fixed holdout used as ground truth.
pub const HOLDOUT_SIZE: usize = 100_000;
/// Mixed into the population seed for the holdout so it never coincides with
/// any replicate's test set or training stream.
const HOLDOUT_SEED_SALT: u64 = 0x686f_6c64_6f75_7421;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub dimension: usize,
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub intercept: f64,
    /// Feature covariance; identity when absent.
    #[serde(default)]
    pub covariance: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for PopulationSpec {
    /// 100 features, the first six with coefficient 0.75.
    fn default() -> Self {
        let mut coefficients = vec![0.0; 100];
        coefficients[..6].fill(0.75);
        Self {
            dimension: 100,
            coefficients,
            intercept: 0.0,
            covariance: None,
            seed: 0,
        }
    }
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.coefficients.len() != self.dimension {
            return Err(SimError::Config(format!(
                "population has {} coefficients for dimension {}",
                self.coefficients.len(),
                self.dimension
            )));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) || !self.intercept.is_finite() {
            return Err(SimError::Config("population coefficients must be finite".into()));
        }
        if let Some(cov) = &self.covariance {
            if cov.len() != self.dimension || cov.iter().any(|r| r.len() != self.dimension) {
                return Err(SimError::Config("covariance must be dimension x dimension".into()));
            }
            self.covariance_factor()?;
        }
        Ok(())
    }

    /// The data-generating model itself.
    pub fn oracle(&self) -> LinearModel {
        LinearModel::new(self.intercept, self.coefficients.clone())
    }

    fn covariance_factor(&self) -> Result<Option<DMatrix<f64>>, SimError> {
        match &self.covariance {
            None => Ok(None),
            Some(rows) => {
                let d = self.dimension;
                let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
                let chol = m
                    .cholesky()
                    .ok_or_else(|| SimError::Config("covariance is not positive definite".into()))?;
                Ok(Some(chol.l()))
            }
        }
    }

    /// Draws `n` observations with the given seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Sample, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let factor = self.covariance_factor()?;
        self.sample_with(n, &mut rng, factor.as_ref())
    }

    fn sample_with(&self, n: usize, rng: &mut ChaCha8Rng, factor: Option<&DMatrix<f64>>) -> Result<Sample, SimError> {
        let d = self.dimension;
        let mut features = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        let oracle = self.oracle();
        let mut z = vec![0.0; d];
        for _ in 0..n {
            z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            let x: Vec<f64> = match factor {
                None => z.clone(),
                Some(l) => (l * DVector::from_column_slice(&z)).iter().copied().collect(),
            };
            let p = oracle.probability(&x);
            labels.push(rng.gen::<f64>() < p);
            features.extend_from_slice(&x);
        }
        Ok(Sample {
            dimension: d,
            features,
            labels,
        })
    }

    /// The fixed ground-truth holdout for this population.
    pub fn holdout(&self) -> Result<Sample, SimError> {
        self.sample(HOLDOUT_SIZE, self.seed ^ HOLDOUT_SEED_SALT)
    }
}

/// Row-major feature matrix with labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub dimension: usize,
    pub features: Vec<f64>,
    pub labels: Vec<bool>,
}

impl Sample {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Predicted probabilities of `model` on every row.
    pub fn scores(&self, model: &LinearModel) -> Vec<f64> {
        (0..self.len()).map(|i| model.probability(self.row(i))).collect()
    }

    /// Linear predictors of `model`; same ranking as [`Sample::scores`] without saturation.
    pub fn linear_predictors(&self, model: &LinearModel) -> Vec<f64> {
        (0..self.len()).map(|i| model.linear(self.row(i))).collect()
    }

    pub fn to_dataset(&self) -> Result<TestDataset, SimError> {
        let features = (0..self.len()).map(|i| self.row(i).to_vec()).collect();
        Ok(TestDataset::new(features, self.labels.clone())?)
    }
}

/// `n` observations from the population; deterministic in `seed`.
pub fn generate_population(spec: &PopulationSpec, n: usize, seed: u64) -> Result<TestDataset, SimError> {
    if n == 0 {
        return Err(SimError::Config("population sample must have at least one row".into()));
    }
    spec.sample(n, seed)?.to_dataset()
}

/// Empirical AUC of `model` on the population's holdout.
pub fn true_auc(model: &LinearModel, holdout: &Sample) -> f64 {
    let scores = holdout.linear_predictors(model);
    empirical_auc(&scores, &holdout.labels).unwrap_or(0.0)
}

/// Mean of `score - label` on the holdout: calibration error in the large.
pub fn true_calibration_error(model: &LinearModel, holdout: &Sample) -> f64 {
    let n = holdout.len() as f64;
    (0..holdout.len())
        .map(|i| model.probability(holdout.row(i)) - if holdout.labels[i] { 1.0 } else { 0.0 })
        .sum::<f64>()
        / n
}
