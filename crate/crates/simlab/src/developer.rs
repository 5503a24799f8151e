//! Simulated model developers and their prespecified counterparts.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use srgp::stats::{auc_difference_test, EvaluatedModel};
use srgp::thresholds::{norm_cdf, norm_quantile};

use crate::model::{fit_logistic, FitSettings, LinearModel};
use crate::population::Sample;

/// Searches the neighbourhood of the approved model for a change that
/// happens to look good on the test set.
///
/// Irrelevant coordinates are visited in ascending order, `+step` then
/// `-step`, each relative to the currently approved model. After an approval
/// the same coordinate keeps moving in the same direction until a denial,
/// then the sweep continues with the next coordinate. Past the last
/// coordinate a new sweep starts from the first.
#[derive(Clone, Debug)]
pub struct AdversarialDeveloper {
    approved: LinearModel,
    irrelevant: Vec<usize>,
    step: f64,
    cursor: usize,
    pushing: Option<(usize, f64)>,
    pending: Option<(usize, f64, LinearModel)>,
}

impl AdversarialDeveloper {
    pub fn new(initial: LinearModel, step: f64) -> Self {
        let irrelevant = initial
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0.0)
            .map(|(i, _)| i)
            .collect();
        Self {
            approved: initial,
            irrelevant,
            step,
            cursor: 0,
            pushing: None,
            pending: None,
        }
    }

    pub fn approved(&self) -> &LinearModel {
        &self.approved
    }

    /// Next candidate; call [`AdversarialDeveloper::observe`] with its outcome.
    pub fn propose(&mut self) -> LinearModel {
        let (coord, dir) = match self.pushing {
            Some(p) => p,
            None => {
                let items = 2 * self.irrelevant.len().max(1);
                let item = self.cursor % items;
                let coord = self.irrelevant.get(item / 2).copied().unwrap_or(0);
                (coord, if item % 2 == 0 { 1.0 } else { -1.0 })
            }
        };
        let mut candidate = self.approved.clone();
        candidate.coefficients[coord] += dir * self.step;
        self.pending = Some((coord, dir, candidate.clone()));
        candidate
    }

    pub fn observe(&mut self, approved: bool) {
        let Some((coord, dir, candidate)) = self.pending.take() else {
            return;
        };
        if approved {
            if self.pushing.is_none() {
                // Resume the sweep at the next coordinate once the push ends.
                let item = self.cursor % (2 * self.irrelevant.len().max(1));
                self.cursor += 2 - item % 2;
            }
            self.approved = candidate;
            self.pushing = Some((coord, dir));
        } else if self.pushing.is_some() {
            self.pushing = None;
        } else {
            self.cursor += 1;
        }
    }
}

/// Prespecified update `t` (1-based) of the adversarial study: the initial
/// model with coordinate `6 + t / 2` (0-based) set to `+step` for even `t`
/// and `-step` for odd `t`. Coordinates past the end wrap around the
/// irrelevant ones.
pub fn adversarial_prespecified(initial: &LinearModel, t: usize, step: f64) -> LinearModel {
    let d = initial.coefficients.len();
    let mut coord = 6 + t / 2;
    if coord >= d {
        coord = 6 + (coord - 6) % d.saturating_sub(6).max(1);
    }
    let mut m = initial.clone();
    if coord < d {
        m.coefficients[coord] = if t % 2 == 0 { step } else { -step };
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateSettings {
    /// One-sided confidence level of the split-sample lower bound.
    pub confidence: f64,
    /// Submit only when the uncorrected power exceeds this.
    pub min_power: f64,
}

impl Default for GateSettings {
    fn default() -> Self {
        Self {
            confidence: 0.9,
            min_power: 0.5,
        }
    }
}

/// Split-sample evidence available to the developer at one tick.
#[derive(Clone, Debug)]
pub struct TickFit {
    /// Lower confidence bound on the AUC improvement of the split model over
    /// the initial model; `-inf` when it could not be computed.
    pub lower_bound: f64,
    /// Standard error the test-set AUC statistic would have, scaled from the validation half.
    pub test_std_error: f64,
    /// Mean of `score - label` of the split model on the validation half.
    pub residual_mean: f64,
    /// Standard error the test-set residual mean would have.
    pub residual_std_error: f64,
}

impl TickFit {
    fn failed() -> Self {
        Self {
            lower_bound: f64::NEG_INFINITY,
            test_std_error: f64::INFINITY,
            residual_mean: 0.0,
            residual_std_error: f64::INFINITY,
        }
    }

    /// Uncorrected one-sided power at level `alpha` if the true improvement
    /// equals the lower bound and the null margin is `delta`.
    pub fn power(&self, delta: f64, alpha: f64) -> f64 {
        if !self.lower_bound.is_finite() || !(self.test_std_error > 0.0 && self.test_std_error.is_finite()) {
            return 0.0;
        }
        let z = (self.lower_bound - delta) / self.test_std_error - norm_quantile(1.0 - alpha);
        norm_cdf(z)
    }

    /// Power of the binding side of the calibration band test when the true
    /// residual mean equals the split-sample estimate.
    pub fn calibration_power(&self, epsilon: f64, alpha: f64) -> f64 {
        if !(self.residual_std_error > 0.0 && self.residual_std_error.is_finite()) {
            return 0.0;
        }
        let z = (epsilon - self.residual_mean.abs()) / self.residual_std_error - norm_quantile(1.0 - alpha);
        norm_cdf(z)
    }

    /// Submission rule: enough power for the AUC test and, when `epsilon` is
    /// given, for the calibration band as well.
    pub fn passes(&self, delta: f64, alpha: f64, epsilon: Option<f64>, gate: &GateSettings) -> bool {
        let auc = self.power(delta, alpha) > gate.min_power;
        auc && epsilon.map_or(true, |e| self.calibration_power(e, alpha) > gate.min_power)
    }
}

/// Refits along an IID stream. The first `initial_size` observations train
/// the initial model and tick `k` adds observation `initial_size + k - 1`.
/// At every tick the split model is fit on the first half of the accumulated
/// data and validated on the second half. The full refit is only computed
/// when asked for. `offset(tick)` is added to the intercept of every refit,
/// modelling a calibration drift of the training pipeline.
pub struct RefitPath<'a> {
    stream: &'a Sample,
    initial_size: usize,
    fit: FitSettings,
    gate: GateSettings,
    test_size: usize,
    offset: Box<dyn Fn(usize) -> f64 + 'a>,
    initial: LinearModel,
    ticks: Vec<TickFit>,
    /// Unshifted split model of every computed tick.
    splits: Vec<Option<LinearModel>>,
    models: HashMap<usize, Option<LinearModel>>,
}

impl<'a> RefitPath<'a> {
    pub fn new(
        stream: &'a Sample,
        initial_size: usize,
        test_size: usize,
        fit: FitSettings,
        gate: GateSettings,
        offset: impl Fn(usize) -> f64 + 'a,
    ) -> Result<Self, crate::model::FitError> {
        let rows: Vec<&[f64]> = (0..initial_size).map(|i| stream.row(i)).collect();
        let initial = fit_logistic(&rows, &stream.labels[..initial_size], None, &fit)?;
        Ok(Self {
            stream,
            initial_size,
            fit,
            gate,
            test_size,
            offset: Box::new(offset),
            initial,
            ticks: Vec::new(),
            splits: Vec::new(),
            models: HashMap::new(),
        })
    }

    pub fn initial(&self) -> &LinearModel {
        &self.initial
    }

    pub fn gate(&self) -> &GateSettings {
        &self.gate
    }

    /// Number of ticks the stream can supply.
    pub fn max_ticks(&self) -> usize {
        self.stream.len() - self.initial_size
    }

    /// Split-sample evidence at `tick` (1-based), computing earlier ticks as needed.
    pub fn tick(&mut self, tick: usize) -> &TickFit {
        while self.ticks.len() < tick {
            let next = self.compute(self.ticks.len() + 1);
            self.ticks.push(next);
        }
        &self.ticks[tick - 1]
    }

    /// Model refit on every observation up to `tick`, drift included; `None`
    /// when the fit fails. Warm-started from that tick's split model, so the
    /// result does not depend on which other ticks were refit.
    pub fn model(&mut self, tick: usize) -> Option<LinearModel> {
        if let Some(m) = self.models.get(&tick) {
            return m.clone();
        }
        self.tick(tick);
        let m = self.initial_size + tick;
        let rows: Vec<&[f64]> = (0..m).map(|i| self.stream.row(i)).collect();
        let warm = self.splits[tick - 1].as_ref().unwrap_or(&self.initial);
        let model = match fit_logistic(&rows, &self.stream.labels[..m], Some(warm), &self.fit) {
            Ok(mut model) => {
                model.intercept += (self.offset)(tick);
                Some(model)
            }
            Err(e) => {
                log::warn!("tick {tick}: refit failed ({e}); skipping");
                None
            }
        };
        self.models.insert(tick, model.clone());
        model
    }

    fn compute(&mut self, tick: usize) -> TickFit {
        let m = self.initial_size + tick;
        let half = m / 2;
        let previous = (tick > 1).then(|| (self.initial_size + tick - 1) / 2);
        let split = match (previous, self.splits.last()) {
            // The training half did not grow, so the fit is unchanged.
            (Some(p), Some(last)) if p == half => last.clone(),
            _ => {
                let rows: Vec<&[f64]> = (0..half).map(|i| self.stream.row(i)).collect();
                let warm = self.splits.iter().rev().flatten().next();
                match fit_logistic(&rows, &self.stream.labels[..half], warm, &self.fit) {
                    Ok(split) => Some(split),
                    Err(e) => {
                        log::warn!("tick {tick}: split-sample fit failed ({e})");
                        None
                    }
                }
            }
        };
        self.splits.push(split.clone());
        let Some(mut split) = split else {
            return TickFit::failed();
        };
        split.intercept += (self.offset)(tick);
        let valid: Vec<usize> = (half..m).collect();
        self.split_bounds(&split, &valid)
    }

    fn split_bounds(&self, split: &LinearModel, valid: &[usize]) -> TickFit {
        let labels: Vec<bool> = valid.iter().map(|&i| self.stream.labels[i]).collect();
        let scale = (valid.len() as f64 / self.test_size as f64).sqrt();
        let residuals: Vec<f64> = valid
            .iter()
            .zip(&labels)
            .map(|(&i, &y)| split.probability(self.stream.row(i)) - if y { 1.0 } else { 0.0 })
            .collect();
        let nv = residuals.len() as f64;
        let residual_mean = residuals.iter().sum::<f64>() / nv;
        let residual_var = residuals.iter().map(|r| (r - residual_mean).powi(2)).sum::<f64>() / (nv - 1.0).max(1.0);
        let mut out = TickFit {
            residual_mean,
            residual_std_error: (residual_var / nv).sqrt() * scale,
            ..TickFit::failed()
        };
        let score = |m: &LinearModel| -> Vec<f64> { valid.iter().map(|&i| m.linear(self.stream.row(i))).collect() };
        let (Ok(cand), Ok(base)) = (
            EvaluatedModel::evaluate(score(split), &labels),
            EvaluatedModel::evaluate(score(&self.initial), &labels),
        ) else {
            return out;
        };
        if let Ok(diff) = auc_difference_test(&cand, &base, 0.0) {
            out.lower_bound = diff.estimate - norm_quantile(self.gate.confidence) * diff.std_error;
            out.test_std_error = diff.std_error * scale;
        }
        out
    }
}

/// Prespecified chain of the refitting study: the models the same refitting
/// plan would submit if its `j`-th margin were `step * (j - 1)`. It needs no
/// test results. Short chains are padded with their last model (or the
/// initial model when nothing would ever be submitted).
pub fn refitting_prespecified(
    path: &mut RefitPath<'_>,
    horizon: usize,
    step: f64,
    alpha: f64,
    epsilon: Option<f64>,
    max_ticks: usize,
) -> Vec<LinearModel> {
    let gate = *path.gate();
    let mut chain = Vec::new();
    for tick in 1..=max_ticks.min(path.max_ticks()) {
        if chain.len() >= horizon {
            break;
        }
        let delta = step * chain.len() as f64;
        if path.tick(tick).passes(delta, alpha, epsilon, &gate) {
            if let Some(m) = path.model(tick) {
                chain.push(m);
            }
        }
    }
    let pad = chain.last().cloned().unwrap_or_else(|| path.initial().clone());
    chain.resize(horizon, pad);
    chain
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::PopulationSpec;

    fn oracle() -> LinearModel {
        let mut c = vec![0.0; 100];
        c[..6].fill(0.75);
        LinearModel::new(0.0, c)
    }

    #[test]
    fn adversarial_enumeration_order() {
        let mut dev = AdversarialDeveloper::new(oracle(), 0.6);
        let first = dev.propose();
        assert_eq!(first.coefficients[6], 0.6);
        dev.observe(false);
        let second = dev.propose();
        assert_eq!(second.coefficients[6], -0.6);
        dev.observe(false);
        let third = dev.propose();
        assert_eq!(third.coefficients[7], 0.6);
        assert_eq!(third.coefficients[6], 0.0);
    }

    #[test]
    fn adversarial_pushes_after_approval() {
        let mut dev = AdversarialDeveloper::new(oracle(), 0.6);
        for _ in 0..4 {
            dev.propose();
            dev.observe(false);
        }
        // Coordinate 9 (1-based), i.e. index 8, positive direction.
        let c = dev.propose();
        assert_eq!(c.coefficients[8], 0.6);
        dev.observe(true);
        let push = dev.propose();
        assert!((push.coefficients[8] - 1.2).abs() < 1e-12);
        dev.observe(false);
        let resume = dev.propose();
        assert!((resume.coefficients[8] - 0.6).abs() < 1e-12);
        assert_eq!(resume.coefficients[9], 0.6);
    }

    #[test]
    fn adversarial_wraps_to_a_new_sweep() {
        let mut dev = AdversarialDeveloper::new(oracle(), 0.6);
        for _ in 0..188 {
            dev.propose();
            dev.observe(false);
        }
        assert_eq!(dev.propose().coefficients[6], 0.6);
    }

    #[test]
    fn prespecified_adversarial_updates() {
        let m2 = adversarial_prespecified(&oracle(), 2, 0.6);
        assert_eq!(m2.coefficients[7], 0.6);
        let m3 = adversarial_prespecified(&oracle(), 3, 0.6);
        assert_eq!(m3.coefficients[7], -0.6);
        let m1 = adversarial_prespecified(&oracle(), 1, 0.6);
        assert_eq!(m1.coefficients[6], -0.6);
    }

    #[test]
    fn power_is_zero_without_a_bound() {
        let fit = TickFit {
            test_std_error: 0.01,
            ..TickFit::failed()
        };
        assert_eq!(fit.power(0.0, 0.1), 0.0);
    }

    #[test]
    fn bound_below_margin_has_low_power() {
        let fit = TickFit {
            lower_bound: 0.01,
            test_std_error: 0.01,
            ..TickFit::failed()
        };
        assert!(fit.power(0.01, 0.1) < 0.5);
        assert!(fit.power(0.05, 0.1) < 0.5);
        assert!(fit.power(-0.05, 0.1) > 0.5);
    }

    #[test]
    fn tiny_training_set_withholds_submission() {
        let spec = PopulationSpec {
            dimension: 3,
            coefficients: vec![0.75, 0.75, 0.0],
            ..PopulationSpec::default()
        };
        let stream = spec.sample(40, 3).unwrap();
        let mut path = RefitPath::new(&stream, 2, 800, FitSettings::default(), GateSettings::default(), |_| 0.0).unwrap();
        assert!(!path.tick(1).passes(0.0, 0.1, None, &GateSettings::default()));
    }

    #[test]
    fn full_refit_does_not_depend_on_request_order() {
        let spec = PopulationSpec::default();
        let stream = spec.sample(400, 8).unwrap();
        let mut a = RefitPath::new(&stream, 250, 800, FitSettings::default(), GateSettings::default(), |_| 0.0).unwrap();
        let mut b = RefitPath::new(&stream, 250, 800, FitSettings::default(), GateSettings::default(), |_| 0.0).unwrap();
        let late = a.model(120).unwrap();
        b.model(40);
        b.model(80);
        assert_eq!(b.model(120).unwrap(), late);
    }

    #[test]
    fn prespecified_refitting_margins() {
        // The j-th prespecified margin is 0.0025 (j - 1): j = 5 gives 0.01.
        assert!((0.0025f64 * (5 - 1) as f64 - 0.01).abs() < 1e-15);
        let spec = PopulationSpec::default();
        let stream = spec.sample(450, 9).unwrap();
        let mut path = RefitPath::new(&stream, 250, 800, FitSettings::default(), GateSettings::default(), |_| 0.0).unwrap();
        let chain = refitting_prespecified(&mut path, 15, 0.0025, 0.1, None, 200);
        assert_eq!(chain.len(), 15);
    }
}
