//! Replicate runner: one test set per replicate, one session per policy.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use srgp::protocol::derive_seed;
use srgp::stats::empirical_auc;
use srgp::{ApprovalSession, HypothesisKind, Policy, SessionConfig, SessionInputs};

use crate::developer::{adversarial_prespecified, refitting_prespecified, AdversarialDeveloper, RefitPath};
use crate::model::LinearModel;
use crate::population::{true_auc, true_calibration_error, Sample};
use crate::scenario::{ScenarioConfig, ScenarioKind};
use crate::SimError;

const TAG_TEST_SET: u64 = 0x7465_7374;
const TAG_STREAM: u64 = 0x7374_7265;
const TAG_SESSION: u64 = 0x7365_7373;

/// Outcome of one policy on one replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub policy: Policy,
    /// Released bit of every submission, in order.
    pub decisions: Vec<bool>,
    pub submissions: usize,
    pub approvals: usize,
    pub false_approvals: usize,
    pub any_false_approval: bool,
    /// Margin after the last decision, `delta0 + approvals * increment`.
    pub final_delta: f64,
    pub baseline_true_auc: f64,
    /// True AUC of the most recently approved model after each step; steps
    /// without a submission repeat the last value. Length = horizon.
    pub true_auc: Vec<f64>,
    /// Test-set AUC of the most recently approved model after each step.
    pub test_auc: Vec<f64>,
}

impl ReplicateResult {
    pub fn final_true_auc(&self) -> f64 {
        self.true_auc.last().copied().unwrap_or(self.baseline_true_auc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: Policy,
    /// Fraction of replicates with at least one false approval.
    pub fwer: f64,
    pub mean_approvals: f64,
    pub mean_submissions: f64,
    pub mean_detected_improvement: f64,
    pub mean_final_true_auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub summaries: Vec<PolicySummary>,
    /// Replicate-major, then in the configured policy order.
    pub replicates: Vec<ReplicateResult>,
}

impl ScenarioResult {
    pub fn summary(&self, policy: Policy) -> Option<&PolicySummary> {
        self.summaries.iter().find(|s| s.policy == policy)
    }

    pub fn runs(&self, policy: Policy) -> impl Iterator<Item = &ReplicateResult> {
        self.replicates.iter().filter(move |r| r.policy == policy)
    }
}

/// Runs every replicate of `config`. `threads = 0` uses the default pool
/// size. Results do not depend on the thread count.
pub fn run_scenario(config: &ScenarioConfig, threads: usize) -> Result<ScenarioResult, SimError> {
    config.validate()?;
    let holdout = config.population.holdout()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))?;
    let per_replicate: Vec<Vec<ReplicateResult>> = pool.install(|| {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| run_replicate(config, &holdout, r))
            .collect::<Result<_, _>>()
    })?;
    let replicates: Vec<ReplicateResult> = per_replicate.into_iter().flatten().collect();
    let summaries = config.policies.iter().map(|&p| summarize(p, &replicates)).collect();
    Ok(ScenarioResult {
        config: config.clone(),
        summaries,
        replicates,
    })
}

fn summarize(policy: Policy, runs: &[ReplicateResult]) -> PolicySummary {
    let runs: Vec<&ReplicateResult> = runs.iter().filter(|r| r.policy == policy).collect();
    let n = runs.len().max(1) as f64;
    let mean = |f: &dyn Fn(&ReplicateResult) -> f64| runs.iter().map(|r| f(r)).sum::<f64>() / n;
    PolicySummary {
        policy,
        fwer: mean(&|r| if r.any_false_approval { 1.0 } else { 0.0 }),
        mean_approvals: mean(&|r| r.approvals as f64),
        mean_submissions: mean(&|r| r.submissions as f64),
        mean_detected_improvement: mean(&|r| r.final_delta),
        mean_final_true_auc: mean(&|r| r.final_true_auc()),
    }
}

/// Holdout evaluations, memoized by exact parameters.
struct Truth<'a> {
    holdout: &'a Sample,
    auc: HashMap<Vec<u64>, f64>,
    calibration: HashMap<Vec<u64>, f64>,
}

impl<'a> Truth<'a> {
    fn new(holdout: &'a Sample) -> Self {
        Self {
            holdout,
            auc: HashMap::new(),
            calibration: HashMap::new(),
        }
    }

    fn auc(&mut self, model: &LinearModel) -> f64 {
        let holdout = self.holdout;
        *self.auc.entry(model.fingerprint()).or_insert_with(|| true_auc(model, holdout))
    }

    fn calibration(&mut self, model: &LinearModel) -> f64 {
        let holdout = self.holdout;
        *self
            .calibration
            .entry(model.fingerprint())
            .or_insert_with(|| true_calibration_error(model, holdout))
    }
}

/// Scores handed to the session: probabilities when calibration is tested,
/// linear predictors otherwise (same ranking, no saturation ties).
fn submission_scores(kind: HypothesisKind, sample: &Sample, model: &LinearModel) -> Vec<f64> {
    match kind {
        HypothesisKind::AucImprovement => sample.linear_predictors(model),
        HypothesisKind::CalibrationBand | HypothesisKind::Composite => sample.scores(model),
    }
}

/// Per-policy bookkeeping shared by both developer types.
struct Track {
    decisions: Vec<bool>,
    approvals: usize,
    false_approvals: usize,
    true_auc: Vec<f64>,
    test_auc: Vec<f64>,
    current_true: f64,
    current_test: f64,
}

impl Track {
    fn new(true_auc: f64, test_auc: f64) -> Self {
        Self {
            decisions: Vec::new(),
            approvals: 0,
            false_approvals: 0,
            true_auc: Vec::new(),
            test_auc: Vec::new(),
            current_true: true_auc,
            current_test: test_auc,
        }
    }

    fn record(&mut self, approved: bool, is_false: bool, true_auc: f64, test_auc: f64) {
        self.decisions.push(approved);
        if approved {
            self.approvals += 1;
            self.false_approvals += usize::from(is_false);
            self.current_true = true_auc;
            self.current_test = test_auc;
        }
        self.true_auc.push(self.current_true);
        self.test_auc.push(self.current_test);
    }

    fn finish(mut self, replicate: usize, policy: Policy, horizon: usize, final_delta: f64, baseline_true: f64) -> ReplicateResult {
        self.true_auc.resize(horizon, self.current_true);
        self.test_auc.resize(horizon, self.current_test);
        ReplicateResult {
            replicate,
            policy,
            submissions: self.decisions.len(),
            decisions: self.decisions,
            approvals: self.approvals,
            false_approvals: self.false_approvals,
            any_false_approval: self.false_approvals > 0,
            final_delta,
            baseline_true_auc: baseline_true,
            true_auc: self.true_auc,
            test_auc: self.test_auc,
        }
    }
}

fn open_session(
    config: &ScenarioConfig,
    policy: Policy,
    seed: u64,
    test: &Sample,
    baseline: &[f64],
    prespecified: &Option<Vec<Vec<f64>>>,
) -> Result<ApprovalSession, SimError> {
    let mut session = SessionConfig::new(config.alpha, config.horizon, policy);
    session.weights = config.weights.clone();
    session.hypothesis = config.hypothesis.clone();
    session.mc_budget = config.mc_budget;
    session.seed = seed;
    let mut inputs = SessionInputs::new(test.labels.clone(), baseline.to_vec());
    if policy.uses_prespecified_chain() {
        let chain = prespecified
            .clone()
            .ok_or_else(|| SimError::Config("prespecified chain missing".into()))?;
        inputs = inputs.with_prespecified(Box::new(chain));
    }
    Ok(ApprovalSession::open(session, inputs)?)
}

fn run_replicate(config: &ScenarioConfig, holdout: &Sample, replicate: usize) -> Result<Vec<ReplicateResult>, SimError> {
    let test = config
        .population
        .sample(config.test_size, derive_seed(config.seed, replicate, TAG_TEST_SET))?;
    let session_seed = derive_seed(config.seed, replicate, TAG_SESSION);
    let mut truth = Truth::new(holdout);
    match config.kind {
        ScenarioKind::Adversarial => run_adversarial(config, &test, session_seed, replicate, &mut truth),
        ScenarioKind::Refitting | ScenarioKind::Composite => {
            let stream_seed = derive_seed(config.seed ^ config.stream_seed, replicate, TAG_STREAM);
            let r = &config.refitting;
            let stream = config.population.sample(r.initial_size + r.max_ticks, stream_seed)?;
            run_refitting(config, &test, &stream, session_seed, replicate, &mut truth)
        }
    }
}

fn run_adversarial(
    config: &ScenarioConfig,
    test: &Sample,
    session_seed: u64,
    replicate: usize,
    truth: &mut Truth<'_>,
) -> Result<Vec<ReplicateResult>, SimError> {
    let kind = config.hypothesis.kind;
    let step = config.adversarial.step;
    let oracle = config.population.oracle();
    let baseline = submission_scores(kind, test, &oracle);
    let baseline_true = truth.auc(&oracle);
    let baseline_test = empirical_auc(&baseline, &test.labels)?;
    let prespecified = config.policies.iter().any(|p| p.uses_prespecified_chain()).then(|| {
        (1..=config.horizon)
            .map(|t| submission_scores(kind, test, &adversarial_prespecified(&oracle, t, step)))
            .collect::<Vec<_>>()
    });

    let mut out = Vec::with_capacity(config.policies.len());
    for &policy in &config.policies {
        let mut session = open_session(config, policy, session_seed, test, &baseline, &prespecified)?;
        let mut developer = AdversarialDeveloper::new(oracle.clone(), step);
        let mut track = Track::new(baseline_true, baseline_test);
        for _ in 0..config.horizon {
            let candidate = developer.propose();
            let scores = submission_scores(kind, test, &candidate);
            let approved = session.submit_model(&scores)?;
            developer.observe(approved);
            let (t_auc, s_auc) = if approved {
                (truth.auc(&candidate), empirical_auc(&scores, &test.labels)?)
            } else {
                (0.0, 0.0)
            };
            // The initial model is the oracle, so every approval is false.
            track.record(approved, true, t_auc, s_auc);
        }
        let delta = session.status().delta;
        out.push(track.finish(replicate, policy, config.horizon, delta, baseline_true));
    }
    Ok(out)
}

fn run_refitting(
    config: &ScenarioConfig,
    test: &Sample,
    stream: &Sample,
    session_seed: u64,
    replicate: usize,
    truth: &mut Truth<'_>,
) -> Result<Vec<ReplicateResult>, SimError> {
    let kind = config.hypothesis.kind;
    let r = &config.refitting;
    let composite = config.kind == ScenarioKind::Composite;
    let epsilon = composite.then_some(config.hypothesis.epsilon);
    let drift = config.composite.clone();
    let mut path = RefitPath::new(stream, r.initial_size, config.test_size, r.fit, r.gate, move |tick| {
        if composite {
            drift.offset(tick)
        } else {
            0.0
        }
    })?;
    let initial = path.initial().clone();
    let baseline = submission_scores(kind, test, &initial);
    let baseline_true = truth.auc(&initial);
    let baseline_test = empirical_auc(&baseline, &test.labels)?;
    let prespecified = if config.policies.iter().any(|p| p.uses_prespecified_chain()) {
        let chain = refitting_prespecified(
            &mut path,
            config.horizon,
            r.prespec_delta_step,
            config.alpha,
            epsilon,
            r.max_ticks,
        );
        Some(chain.iter().map(|m| submission_scores(kind, test, m)).collect())
    } else {
        None
    };

    let ticks = r.max_ticks.min(path.max_ticks());
    let mut out = Vec::with_capacity(config.policies.len());
    for &policy in &config.policies {
        let mut session = open_session(config, policy, session_seed, test, &baseline, &prespecified)?;
        let mut track = Track::new(baseline_true, baseline_test);
        for tick in 1..=ticks {
            let status = session.status();
            if status.exhausted {
                break;
            }
            if !path.tick(tick).passes(status.delta, config.alpha, epsilon, &r.gate) {
                continue;
            }
            let Some(candidate) = path.model(tick) else {
                continue;
            };
            let scores = submission_scores(kind, test, &candidate);
            let approved = session.submit_model(&scores)?;
            let (t_auc, s_auc, is_false) = if approved {
                let t_auc = truth.auc(&candidate);
                let mut bad = t_auc <= baseline_true + status.delta;
                if composite {
                    bad |= truth.calibration(&candidate).abs() >= config.hypothesis.epsilon;
                }
                (t_auc, empirical_auc(&scores, &test.labels)?, bad)
            } else {
                (0.0, 0.0, false)
            };
            track.record(approved, is_false, t_auc, s_auc);
        }
        let delta = session.status().delta;
        out.push(track.finish(replicate, policy, config.horizon, delta, baseline_true));
    }
    Ok(out)
}
