//! Rectangle probabilities of a standard multivariate normal vector.
//!
//! The integral is reduced to the unit cube by sequential conditioning on a
//! Cholesky factor (Genz's separation of variables) and evaluated with a
//! randomly shifted rank-1 lattice. Each shift gives an unbiased estimate;
//! their spread gives the reported standard error. The last variable is
//! integrated in closed form, so a [`PreparedTail`] can re-evaluate the
//! probability for many bounds on that variable at O(points) cost.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::normal::{norm_cdf, norm_quantile};
use super::ThresholdError;

/// Default number of lattice points per evaluation.
pub const DEFAULT_BUDGET: usize = 1 << 17;
/// Default number of random shifts used for the error estimate.
pub const DEFAULT_SHIFTS: usize = 16;
/// Smallest eigenvalue tolerated for a correlation matrix.
pub const PSD_TOLERANCE: f64 = 1e-8;

const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    EstimatedFromInfluence,
    Exact,
}

/// Symmetric, unit-diagonal, positive semidefinite correlation matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBlock {
    size: usize,
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl CorrelationBlock {
    pub fn identity(size: usize) -> Self {
        let mut values = vec![0.0; size * size];
        for i in 0..size {
            values[i * size + i] = 1.0;
        }
        Self {
            size,
            values,
            provenance: Provenance::Exact,
        }
    }

    /// Validates a row-major matrix.
    pub fn new(size: usize, values: Vec<f64>, provenance: Provenance) -> Result<Self, ThresholdError> {
        if values.len() != size * size {
            return Err(ThresholdError::DimensionMismatch {
                expected: size * size,
                found: values.len(),
            });
        }
        for i in 0..size {
            if (values[i * size + i] - 1.0).abs() > 1e-12 {
                return Err(ThresholdError::InvalidCorrelation(format!(
                    "diagonal entry {i} is {}",
                    values[i * size + i]
                )));
            }
            for j in 0..i {
                let (a, b) = (values[i * size + j], values[j * size + i]);
                if !a.is_finite() || (a - b).abs() > 1e-12 {
                    return Err(ThresholdError::InvalidCorrelation(format!(
                        "entries ({i},{j}) and ({j},{i}) are {a} and {b}"
                    )));
                }
                if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&a) {
                    return Err(ThresholdError::InvalidCorrelation(format!(
                        "entry ({i},{j}) = {a} is outside [-1, 1]"
                    )));
                }
            }
        }
        let block = Self {
            size,
            values,
            provenance,
        };
        let min = block.min_eigenvalue();
        if min < -PSD_TOLERANCE {
            return Err(ThresholdError::NotPositiveSemidefinite { min_eigenvalue: min });
        }
        Ok(block)
    }

    pub fn from_rows(rows: &[Vec<f64>], provenance: Provenance) -> Result<Self, ThresholdError> {
        let size = rows.len();
        let mut values = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(ThresholdError::DimensionMismatch {
                    expected: size,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(size, values, provenance)
    }

    /// Two-variable block with correlation `rho`.
    pub fn pair(rho: f64) -> Result<Self, ThresholdError> {
        Self::new(2, vec![1.0, rho, rho, 1.0], Provenance::Exact)
    }

    /// Equicorrelated block.
    pub fn exchangeable(size: usize, rho: f64) -> Result<Self, ThresholdError> {
        let mut values = vec![rho; size * size];
        for i in 0..size {
            values[i * size + i] = 1.0;
        }
        Self::new(size, values, Provenance::Exact)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.size, self.size, &self.values)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.size == 0 {
            return 0.0;
        }
        SymmetricEigen::new(self.to_matrix())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Block restricted to `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let m = indices.len();
        let mut values = Vec::with_capacity(m * m);
        for &i in indices {
            for &j in indices {
                values.push(self.get(i, j));
            }
        }
        Self {
            size: m,
            values,
            provenance: self.provenance,
        }
    }

    /// Appends one variable with the given correlations to the existing ones.
    pub fn bordered(&self, cross: &[f64]) -> Result<Self, ThresholdError> {
        if cross.len() != self.size {
            return Err(ThresholdError::DimensionMismatch {
                expected: self.size,
                found: cross.len(),
            });
        }
        let m = self.size + 1;
        let mut values = vec![0.0; m * m];
        for i in 0..self.size {
            for j in 0..self.size {
                values[i * m + j] = self.get(i, j);
            }
            values[i * m + self.size] = cross[i];
            values[self.size * m + i] = cross[i];
        }
        values[m * m - 1] = 1.0;
        Self::new(m, values, self.provenance)
    }

    /// Sets negative off-diagonal entries to zero. If that breaks positive
    /// semidefiniteness the off-diagonals are shrunk toward the identity until
    /// it holds again. Returns the number of clipped entries and the shrink
    /// factor applied (1 when none).
    pub fn clip_negative(&self) -> (Self, usize, f64) {
        let m = self.size;
        let mut clipped = 0;
        let mut values = self.values.clone();
        for i in 0..m {
            for j in 0..m {
                if i != j && values[i * m + j] < 0.0 {
                    values[i * m + j] = 0.0;
                    if i < j {
                        clipped += 1;
                    }
                }
            }
        }
        let mut out = Self {
            size: m,
            values,
            provenance: self.provenance,
        };
        let mut factor = 1.0;
        if clipped > 0 {
            while out.min_eigenvalue() < -PSD_TOLERANCE && factor > 1e-6 {
                factor *= 0.9;
                for i in 0..m {
                    for j in 0..m {
                        if i != j {
                            out.values[i * m + j] = self.values[i * m + j].max(0.0) * factor;
                        }
                    }
                }
            }
        }
        (out, clipped, factor)
    }
}

/// Estimated probability with its Monte Carlo standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthantEstimate {
    pub probability: f64,
    pub std_error: f64,
}

/// Configuration of the randomized lattice rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthantEngine {
    pub budget: usize,
    pub shifts: usize,
    pub seed: u64,
}

impl Default for OrthantEngine {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            shifts: DEFAULT_SHIFTS,
            seed: 0x5eed,
        }
    }
}

impl OrthantEngine {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            shifts: DEFAULT_SHIFTS,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    fn points_per_shift(&self) -> usize {
        (self.budget / self.shifts.max(1)).max(1)
    }

    /// `Pr(lower_i < Z_i <= upper_i for all i)` for `Z ~ N(0, rho)`.
    pub fn probability(
        &self,
        rho: &CorrelationBlock,
        lower: &[f64],
        upper: &[f64],
    ) -> Result<OrthantEstimate, ThresholdError> {
        let m = rho.size();
        if lower.len() != m || upper.len() != m {
            return Err(ThresholdError::DimensionMismatch {
                expected: m,
                found: lower.len().min(upper.len()),
            });
        }
        for i in 0..m {
            if lower[i].is_nan() || upper[i].is_nan() || lower[i] >= upper[i] {
                return Err(ThresholdError::InvalidBounds(format!(
                    "variable {i} has bounds ({}, {}]",
                    lower[i], upper[i]
                )));
            }
        }
        if m == 0 {
            return Ok(OrthantEstimate {
                probability: 1.0,
                std_error: 0.0,
            });
        }
        let tail = self.prepare(rho, &lower[..m - 1], &upper[..m - 1])?;
        Ok(tail.estimate(lower[m - 1], upper[m - 1]))
    }

    /// Integrates out every variable but the last, whose bounds stay free.
    pub fn prepare(
        &self,
        rho: &CorrelationBlock,
        lower: &[f64],
        upper: &[f64],
    ) -> Result<PreparedTail, ThresholdError> {
        let m = rho.size();
        if m == 0 || lower.len() + 1 != m || upper.len() + 1 != m {
            return Err(ThresholdError::DimensionMismatch {
                expected: m.saturating_sub(1),
                found: lower.len(),
            });
        }
        let chol = semidefinite_cholesky(rho)?;
        let dims = m - 1;
        let per_shift = self.points_per_shift();
        let shifts = self.shifts.max(1);
        let generators = lattice_generators(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut weights = Vec::with_capacity(per_shift * shifts);
        let mut means = Vec::with_capacity(per_shift * shifts);
        let mut y = vec![0.0; dims];
        let last = &chol[dims * m..dims * m + dims];
        for _ in 0..shifts {
            let shift: Vec<f64> = (0..dims).map(|_| rng.gen::<f64>()).collect();
            for point in 0..per_shift {
                let mut weight = 1.0;
                for i in 0..dims {
                    let row = &chol[i * m..i * m + i];
                    let mu: f64 = row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
                    let scale = chol[i * m + i];
                    if scale > 0.0 {
                        let d = norm_cdf((lower[i] - mu) / scale);
                        let e = norm_cdf((upper[i] - mu) / scale);
                        weight *= e - d;
                        if weight <= 0.0 {
                            weight = 0.0;
                            break;
                        }
                        let x = (point as f64 + 1.0) * generators[i] + shift[i];
                        let u = tent(x.fract());
                        let p = (d + u * (e - d)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                        y[i] = norm_quantile(p);
                    } else {
                        if !(lower[i] < mu && mu <= upper[i]) {
                            weight = 0.0;
                            break;
                        }
                        y[i] = 0.0;
                    }
                }
                let mean = if weight > 0.0 {
                    last.iter().zip(&y).map(|(l, v)| l * v).sum()
                } else {
                    0.0
                };
                weights.push(weight);
                means.push(mean);
            }
        }
        Ok(PreparedTail {
            weights,
            means,
            scale: chol[m * m - 1],
            shifts,
            per_shift,
        })
    }
}

fn tent(x: f64) -> f64 {
    1.0 - (2.0 * x - 1.0).abs()
}

/// Lower-triangular factor, row-major. A pivot that vanishes marks a
/// variable fully determined by the earlier ones; its column is zeroed.
fn semidefinite_cholesky(rho: &CorrelationBlock) -> Result<Vec<f64>, ThresholdError> {
    let m = rho.size();
    let mut l = vec![0.0; m * m];
    for j in 0..m {
        let mut d = rho.get(j, j);
        for k in 0..j {
            d -= l[j * m + k] * l[j * m + k];
        }
        if d < -PSD_TOLERANCE * 10.0 {
            return Err(ThresholdError::NotPositiveSemidefinite { min_eigenvalue: d });
        }
        if d <= PIVOT_TOLERANCE {
            continue;
        }
        let pivot = d.sqrt();
        l[j * m + j] = pivot;
        for i in j + 1..m {
            let mut s = rho.get(i, j);
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            l[i * m + j] = s / pivot;
        }
    }
    Ok(l)
}

fn lattice_generators(dims: usize) -> Vec<f64> {
    let mut primes = Vec::with_capacity(dims);
    let mut candidate = 2u64;
    while primes.len() < dims {
        if primes.iter().take_while(|&&p| p * p <= candidate).all(|&p| candidate % p != 0) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes.iter().map(|&p| (p as f64).sqrt().fract()).collect()
}

/// Lattice prefix weights and conditional means of the last variable.
#[derive(Clone, Debug)]
pub struct PreparedTail {
    weights: Vec<f64>,
    means: Vec<f64>,
    scale: f64,
    shifts: usize,
    per_shift: usize,
}

impl PreparedTail {
    fn contribution(&self, idx: usize, lower: f64, upper: f64) -> f64 {
        let w = self.weights[idx];
        if w == 0.0 {
            return 0.0;
        }
        let mu = self.means[idx];
        if self.scale > 0.0 {
            w * (norm_cdf((upper - mu) / self.scale) - norm_cdf((lower - mu) / self.scale))
        } else if lower < mu && mu <= upper {
            w
        } else {
            0.0
        }
    }

    /// Point estimate of `Pr(prefix event, lower < last <= upper)`.
    pub fn probability(&self, lower: f64, upper: f64) -> f64 {
        let total: f64 = (0..self.weights.len())
            .map(|i| self.contribution(i, lower, upper))
            .sum();
        total / self.weights.len() as f64
    }

    /// Estimate with the spread across random shifts.
    pub fn estimate(&self, lower: f64, upper: f64) -> OrthantEstimate {
        let shift_means: Vec<f64> = (0..self.shifts)
            .map(|s| {
                let start = s * self.per_shift;
                (start..start + self.per_shift)
                    .map(|i| self.contribution(i, lower, upper))
                    .sum::<f64>()
                    / self.per_shift as f64
            })
            .collect();
        let k = shift_means.len() as f64;
        let mean = shift_means.iter().sum::<f64>() / k;
        let std_error = if shift_means.len() > 1 {
            let var = shift_means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            0.0
        };
        OrthantEstimate {
            probability: mean,
            std_error,
        }
    }
}
