use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::thresholds::{CorrelationBlock, Provenance};

/// Estimated correlation of several statistics and what was done to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub block: CorrelationBlock,
    /// Statistics whose influence vector had zero variance; their off-diagonals are 0.
    pub degenerate: Vec<bool>,
    /// Number of negative off-diagonal pairs, left for the threshold solver to handle.
    pub negative_pairs: usize,
    /// Whether eigenvalue clipping was needed to make the matrix positive semidefinite.
    pub projected: bool,
}

/// Sample correlation of the given per-observation vectors.
pub fn correlation_matrix(vectors: &[Vec<f64>]) -> Result<CorrelationEstimate, StatsError> {
    let k = vectors.len();
    if k == 0 {
        return Err(StatsError::Empty);
    }
    let n = vectors[0].len();
    for v in vectors {
        if v.len() != n {
            return Err(StatsError::LengthMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let mean = v.iter().sum::<f64>() / n.max(1) as f64;
            v.iter().map(|x| x - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let degenerate: Vec<bool> = norms.iter().map(|&s| !(s > 0.0)).collect();
    let mut values = vec![0.0; k * k];
    let mut negative_pairs = 0;
    for i in 0..k {
        values[i * k + i] = 1.0;
        for j in 0..i {
            let r = if degenerate[i] || degenerate[j] {
                0.0
            } else {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            };
            if r < 0.0 {
                negative_pairs += 1;
            }
            values[i * k + j] = r;
            values[j * k + i] = r;
        }
    }
    let (values, projected) = nearest_correlation(values, k);
    let block = CorrelationBlock::new(k, values, Provenance::EstimatedFromInfluence)
        .expect("projected matrix is a valid correlation matrix");
    Ok(CorrelationEstimate {
        block,
        degenerate,
        negative_pairs,
        projected,
    })
}

/// Clips negative eigenvalues and rescales to unit diagonal when needed.
fn nearest_correlation(values: Vec<f64>, k: usize) -> (Vec<f64>, bool) {
    let m = DMatrix::from_row_slice(k, k, &values);
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.iter().all(|&l| l >= -1e-10) {
        return (values, false);
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let d = (rebuilt[(i, i)] * rebuilt[(j, j)]).sqrt();
            out[i * k + j] = if i == j {
                1.0
            } else if d > 0.0 {
                (0.5 * (rebuilt[(i, j)] + rebuilt[(j, i)]) / d).clamp(-1.0, 1.0)
            } else {
                0.0
            };
        }
    }
    (out, true)
}

/// Correlation of the AUC-difference statistics of several models against a
/// common baseline, estimated from their influence-difference vectors.
pub fn statistic_correlation(influences: &[&[f64]], baseline: &[f64]) -> Result<CorrelationEstimate, StatsError> {
    let diffs = influences
        .iter()
        .map(|phi| {
            if phi.len() != baseline.len() {
                return Err(StatsError::LengthMismatch {
                    expected: baseline.len(),
                    found: phi.len(),
                });
            }
            Ok(phi.iter().zip(baseline).map(|(a, b)| a - b).collect())
        })
        .collect::<Result<Vec<Vec<f64>>, _>>()?;
    correlation_matrix(&diffs)
}
