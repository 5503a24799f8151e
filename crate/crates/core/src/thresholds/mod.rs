//! Significance thresholds for each policy.
//!
//! All joint probabilities are written in lower-tail form: a test rejects when
//! its standardized statistic `U` satisfies `U <= quantile(c)`, so the p-value
//! is `Phi(U)`. Deviations of the prespecified models are oriented the same
//! way, which makes a prespecified model that tracks the adaptive one show up
//! as positive correlation.

pub mod normal;
pub mod orthant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use normal::{norm_cdf, norm_quantile, norm_sf};
pub use orthant::{CorrelationBlock, OrthantEngine, OrthantEstimate, PreparedTail, Provenance};

/// Probability gap at which bisection stops.
pub const PROBABILITY_TOLERANCE: f64 = 1e-6;
/// Iteration cap of every bisection.
pub const MAX_ITERATIONS: usize = 200;
/// Thresholds are solved against the target minus this many standard errors.
pub const GUARD_STD_ERRORS: f64 = 2.0;
/// Upper end of the bracket for critical values on the standardized scale.
pub const CRITICAL_VALUE_CEILING: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),
    #[error("correlation matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("root finding did not converge in {iterations} iterations; increase the Monte Carlo budget")]
    NonConvergence { iterations: usize },
    #[error("weight must lie in [0, 1], got {0}")]
    InvalidWeight(f64),
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("critical value for prespecified step {0} is missing")]
    MissingCriticalValue(usize),
}

/// Solved threshold (or critical value) with solver diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSolution {
    /// Value to compare against: guarded and floored at the Bonferroni value.
    pub value: f64,
    /// Root of the unguarded equation.
    pub raw: f64,
    /// Probability budget `w * alpha`.
    pub target: f64,
    /// Monte Carlo standard error of the joint probability at the raw root.
    pub std_error: f64,
    pub iterations: usize,
    /// Number of variables in the joint probability, including the tested one.
    pub dimension: usize,
    /// Off-diagonal correlations raised to zero.
    pub clipped: usize,
    /// Conditioning events left out because their correlation with the tested statistic was negative.
    pub dropped: usize,
    /// Shrink factor applied to restore positive semidefiniteness (1 when unused).
    pub shrink: f64,
}

impl ThresholdSolution {
    fn closed_form(value: f64, target: f64) -> Self {
        Self {
            value,
            raw: value,
            target,
            std_error: 0.0,
            iterations: 0,
            dimension: 1,
            clipped: 0,
            dropped: 0,
            shrink: 1.0,
        }
    }
}

fn check_inputs(w: f64, alpha: f64) -> Result<(), ThresholdError> {
    if !(0.0..=1.0).contains(&w) {
        return Err(ThresholdError::InvalidWeight(w));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ThresholdError::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Weighted Bonferroni threshold `w * alpha`.
pub fn bonferroni_threshold(w: f64, alpha: f64) -> f64 {
    w * alpha
}

/// A member of a fixed-sequence group already tested and not rejected.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupMember {
    pub threshold: f64,
    pub weight: f64,
}

/// Earlier members of the current failure streak and the correlation of all
/// member statistics; the last row of `correlation` is the statistic under test.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupState {
    pub members: Vec<GroupMember>,
    pub correlation: CorrelationBlock,
}

impl GroupState {
    pub fn first() -> Self {
        Self {
            members: Vec::new(),
            correlation: CorrelationBlock::identity(1),
        }
    }
}

/// Critical values already spent on the prespecified chain and the
/// correlation among the prespecified deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct PrespecState {
    pub critical_values: Vec<f64>,
    pub correlation: CorrelationBlock,
}

/// Joint event "every conditioning variable above its bound, last variable at most q".
struct TailProblem {
    tail: Option<PreparedTail>,
    dimension: usize,
    clipped: usize,
    dropped: usize,
    shrink: f64,
}

impl TailProblem {
    /// `corr` orders the conditioning variables first and the tested one last.
    fn new(
        corr: &CorrelationBlock,
        bounds: &[f64],
        engine: &OrthantEngine,
    ) -> Result<Self, ThresholdError> {
        let target = corr.size() - 1;
        if bounds.len() != target {
            return Err(ThresholdError::DimensionMismatch {
                expected: target,
                found: bounds.len(),
            });
        }
        let mut keep = Vec::new();
        let mut dropped = 0;
        for (i, &b) in bounds.iter().enumerate() {
            if b.is_nan() {
                return Err(ThresholdError::InvalidBounds(format!("bound {i} is NaN")));
            }
            if b == f64::NEG_INFINITY {
                continue;
            }
            if corr.get(i, target) < 0.0 {
                dropped += 1;
                continue;
            }
            keep.push(i);
        }
        let kept_bounds: Vec<f64> = keep.iter().map(|&i| bounds[i]).collect();
        keep.push(target);
        let (block, clipped, shrink) = corr.select(&keep).clip_negative();
        let dimension = keep.len();
        let tail = if dimension > 1 {
            let upper = vec![f64::INFINITY; dimension - 1];
            Some(engine.prepare(&block, &kept_bounds, &upper)?)
        } else {
            None
        };
        Ok(Self {
            tail,
            dimension,
            clipped,
            dropped,
            shrink,
        })
    }

    fn probability(&self, q: f64) -> f64 {
        match &self.tail {
            Some(t) => t.probability(f64::NEG_INFINITY, q),
            None => norm_cdf(q),
        }
    }

    fn std_error(&self, q: f64) -> f64 {
        self.tail
            .as_ref()
            .map_or(0.0, |t| t.estimate(f64::NEG_INFINITY, q).std_error)
    }

    /// Largest `x` in `[lo, hi]` with `probability(map(x)) <= target`, plus
    /// the guarded value solved at `target - 2 SE` and floored at `lo`.
    fn solve(
        &self,
        lo: f64,
        hi: f64,
        target: f64,
        map: impl Fn(f64) -> f64,
    ) -> Result<ThresholdSolution, ThresholdError> {
        let f = |x: f64| self.probability(map(x));
        let (raw, iterations) = bisect(&f, lo, hi, target)?;
        let std_error = self.std_error(map(raw));
        let guarded_target = target - GUARD_STD_ERRORS * std_error;
        let value = if std_error > 0.0 {
            if guarded_target <= 0.0 {
                lo
            } else {
                bisect(&f, lo, raw, guarded_target)?.0
            }
        } else {
            raw
        };
        Ok(ThresholdSolution {
            value: value.max(lo),
            raw,
            target,
            std_error,
            iterations,
            dimension: self.dimension,
            clipped: self.clipped,
            dropped: self.dropped,
            shrink: self.shrink,
        })
    }
}

/// Largest `x` in `[lo, hi]` with `f(x) <= target` for nondecreasing `f`.
/// Returns the feasible end of the final bracket and the iteration count.
fn bisect(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, target: f64) -> Result<(f64, usize), ThresholdError> {
    if f(hi) <= target {
        return Ok((hi, 0));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    if f_lo > target {
        return Ok((lo, 0));
    }
    let mut f_hi = f(hi);
    for iteration in 1..=MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid <= target {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
        let width = hi - lo;
        if f_hi - f_lo <= PROBABILITY_TOLERANCE && target - f_lo <= PROBABILITY_TOLERANCE
            || width <= 1e-14 * lo.abs().max(1e-3)
        {
            return Ok((lo, iteration));
        }
    }
    Err(ThresholdError::NonConvergence {
        iterations: MAX_ITERATIONS,
    })
}

/// Largest threshold for the next member of a failure streak such that the
/// probability of surviving every earlier member and then rejecting is at
/// most `w_j * alpha`. Negative correlations among earlier members are
/// clipped to zero; earlier members negatively correlated with the tested
/// statistic are left out of the conditioning event, which only enlarges it.
pub fn fixed_sequence_threshold(
    group: &GroupState,
    w_j: f64,
    alpha: f64,
    engine: &OrthantEngine,
) -> Result<ThresholdSolution, ThresholdError> {
    check_inputs(w_j, alpha)?;
    let target = bonferroni_threshold(w_j, alpha);
    if group.correlation.size() != group.members.len() + 1 {
        return Err(ThresholdError::DimensionMismatch {
            expected: group.members.len() + 1,
            found: group.correlation.size(),
        });
    }
    if group.members.is_empty() || target == 0.0 {
        return Ok(ThresholdSolution::closed_form(target, target));
    }
    let bounds: Vec<f64> = group.members.iter().map(|m| norm_quantile(m.threshold)).collect();
    let problem = TailProblem::new(&group.correlation, &bounds, engine)?;
    if problem.tail.is_none() {
        let mut s = ThresholdSolution::closed_form(target, target);
        s.dropped = problem.dropped;
        return Ok(s);
    }
    problem.solve(target, 1.0, target, norm_quantile)
}

/// Critical value for the `t`-th prespecified deviation: the largest `z` with
/// probability at most `w * alpha` of all earlier deviations staying above
/// their critical values while the `t`-th falls to `z` or below.
pub fn prespec_critical_value(
    state: &PrespecState,
    t: usize,
    w_pres: f64,
    alpha: f64,
    engine: &OrthantEngine,
) -> Result<ThresholdSolution, ThresholdError> {
    check_inputs(w_pres, alpha)?;
    if t == 0 || state.correlation.size() < t {
        return Err(ThresholdError::DimensionMismatch {
            expected: t,
            found: state.correlation.size(),
        });
    }
    if state.critical_values.len() < t - 1 {
        return Err(ThresholdError::MissingCriticalValue(state.critical_values.len() + 1));
    }
    let target = bonferroni_threshold(w_pres, alpha);
    let floor = norm_quantile(target);
    if target == 0.0 || t == 1 {
        return Ok(ThresholdSolution::closed_form(floor, target));
    }
    let indices: Vec<usize> = (0..t).collect();
    let corr = state.correlation.select(&indices);
    let problem = TailProblem::new(&corr, &state.critical_values[..t - 1], engine)?;
    if problem.tail.is_none() {
        let mut s = ThresholdSolution::closed_form(floor, target);
        s.dropped = problem.dropped;
        return Ok(s);
    }
    problem.solve(floor, CRITICAL_VALUE_CEILING.max(floor), target, |z| z)
}

/// Threshold for an adaptive submission when the prespecified deviations
/// `1..=t` must all stay above their critical values. `rho_cross` holds the
/// correlation of the tested statistic with each prespecified deviation.
pub fn prespec_adaptive_threshold(
    state: &PrespecState,
    w_at: f64,
    alpha: f64,
    rho_cross: &[f64],
    engine: &OrthantEngine,
) -> Result<ThresholdSolution, ThresholdError> {
    check_inputs(w_at, alpha)?;
    let t = rho_cross.len();
    if state.critical_values.len() < t {
        return Err(ThresholdError::MissingCriticalValue(state.critical_values.len() + 1));
    }
    if state.correlation.size() < t {
        return Err(ThresholdError::DimensionMismatch {
            expected: t,
            found: state.correlation.size(),
        });
    }
    let target = bonferroni_threshold(w_at, alpha);
    if target == 0.0 || t == 0 {
        return Ok(ThresholdSolution::closed_form(target, target));
    }
    let indices: Vec<usize> = (0..t).collect();
    let corr = state.correlation.select(&indices).bordered(rho_cross)?;
    let problem = TailProblem::new(&corr, &state.critical_values[..t], engine)?;
    if problem.tail.is_none() {
        let mut s = ThresholdSolution::closed_form(target, target);
        s.dropped = problem.dropped;
        return Ok(s);
    }
    problem.solve(target, 1.0, target, norm_quantile)
}
