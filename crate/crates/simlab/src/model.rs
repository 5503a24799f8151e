//! Logistic-regression models and a Newton (IRLS) maximum-likelihood fitter.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("no Newton convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("Hessian is not positive definite")]
    SingularHessian,
    #[error("training data has {rows} rows but {labels} labels")]
    Misaligned { rows: usize, labels: usize },
    #[error("training data is empty")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LinearModel {
    pub fn new(intercept: f64, coefficients: Vec<f64>) -> Self {
        Self {
            intercept,
            coefficients,
        }
    }

    pub fn linear(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear(x))
    }

    /// Bit-exact identity of the parameters, used to cache evaluations.
    pub fn fingerprint(&self) -> Vec<u64> {
        std::iter::once(self.intercept)
            .chain(self.coefficients.iter().copied())
            .map(f64::to_bits)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    /// L2 penalty on the slopes; keeps separable data bounded.
    pub ridge: f64,
    pub max_iterations: usize,
    /// Stop when the largest gradient entry divided by the row count is below this.
    pub gradient_tolerance: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            ridge: 1e-6,
            max_iterations: 100,
            gradient_tolerance: 1e-8,
        }
    }
}

fn penalized_loglik(rows: &[&[f64]], labels: &[bool], theta: &[f64], ridge: f64) -> f64 {
    let mut ll = 0.0;
    for (x, &y) in rows.iter().zip(labels) {
        let eta = theta[0] + theta[1..].iter().zip(x.iter()).map(|(b, v)| b * v).sum::<f64>();
        // log(1 + e^eta) computed stably.
        let softplus = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
        ll += if y { eta - softplus } else { -softplus };
    }
    ll - 0.5 * ridge * theta[1..].iter().map(|b| b * b).sum::<f64>()
}

/// Maximum-likelihood logistic regression with an intercept.
pub fn fit_logistic(
    rows: &[&[f64]],
    labels: &[bool],
    warm_start: Option<&LinearModel>,
    settings: &FitSettings,
) -> Result<LinearModel, FitError> {
    if rows.len() != labels.len() {
        return Err(FitError::Misaligned {
            rows: rows.len(),
            labels: labels.len(),
        });
    }
    if rows.is_empty() {
        return Err(FitError::Empty);
    }
    let d = rows[0].len();
    let k = d + 1;
    let n = rows.len() as f64;
    let mut theta = vec![0.0; k];
    if let Some(m) = warm_start.filter(|m| m.coefficients.len() == d) {
        theta[0] = m.intercept;
        theta[1..].copy_from_slice(&m.coefficients);
    }
    let mut current = penalized_loglik(rows, labels, &theta, settings.ridge);
    let mut hess = vec![0.0; k * k];
    for _ in 0..settings.max_iterations {
        // Gradient first: a warm start is often already converged, and the
        // O(n d^2) Hessian is only needed when another step is taken.
        let mut grad = vec![0.0; k];
        let mut weights = Vec::with_capacity(rows.len());
        for (x, &y) in rows.iter().zip(labels) {
            let eta = theta[0] + theta[1..].iter().zip(x.iter()).map(|(b, v)| b * v).sum::<f64>();
            let p = sigmoid(eta);
            let r = if y { 1.0 } else { 0.0 } - p;
            grad[0] += r;
            for i in 0..d {
                grad[i + 1] += r * x[i];
            }
            weights.push(p * (1.0 - p));
        }
        for i in 1..k {
            grad[i] -= settings.ridge * theta[i];
        }
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax / n <= settings.gradient_tolerance {
            return Ok(LinearModel::new(theta[0], theta[1..].to_vec()));
        }
        hess.iter_mut().for_each(|h| *h = 0.0);
        for (x, &w) in rows.iter().zip(&weights) {
            hess[0] += w;
            for i in 0..d {
                let wi = w * x[i];
                hess[i + 1] += wi;
                let row = &mut hess[(i + 1) * k..(i + 2) * k];
                for j in i..d {
                    row[j + 1] += wi * x[j];
                }
            }
        }
        for i in 1..k {
            hess[i * k + i] += settings.ridge;
        }
        let h = DMatrix::from_fn(k, k, |i, j| if i <= j { hess[i * k + j] } else { hess[j * k + i] });
        let chol = h.cholesky().ok_or(FitError::SingularHessian)?;
        let step = chol.solve(&DVector::from_vec(grad));
        // Newton step with halving until the penalized likelihood does not drop.
        let mut scale = 1.0;
        loop {
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + scale * s).collect();
            let value = penalized_loglik(rows, labels, &trial, settings.ridge);
            if value >= current - 1e-12 * current.abs().max(1.0) || scale < 1e-6 {
                theta = trial;
                current = value;
                break;
            }
            scale *= 0.5;
        }
    }
    Err(FitError::NoConvergence(settings.max_iterations))
}
