use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::audit::{
    labels_digest, now_ms, read_audit_log, scores_digest, ApprovalRecord, AuditEntry, AuditHeader, AuditWriter,
    AUDIT_FORMAT,
};
use super::config::SessionConfig;
use super::report::Report;
use super::SessionError;
use crate::graph::GraphSession;
use crate::policy::Policy;
use crate::stats::{
    auc_difference_test, calibration_band_test, composite_test, correlation_matrix, read_predictions,
    EvaluatedModel, HypothesisKind, TestDataset,
};
use crate::thresholds::{
    fixed_sequence_threshold, prespec_adaptive_threshold, prespec_critical_value, GroupMember, GroupState,
    OrthantEngine, PrespecState, ThresholdSolution,
};

const SEED_TAG_ADAPTIVE: u64 = 1;
const SEED_TAG_PRESPEC: u64 = 2;

/// Seed of the orthant engine for one solve, derived from the master seed.
pub fn derive_seed(master: u64, step: usize, tag: u64) -> u64 {
    let mut z = master ^ (step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tag.rotate_left(32);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Supplies the scores of the prespecified update paired with each step.
pub trait PrespecSource: Send {
    /// Scores on the test set of the update paired with step `t` (1-based).
    fn scores(&mut self, t: usize) -> Result<Vec<f64>, SessionError>;
}

impl PrespecSource for Vec<Vec<f64>> {
    fn scores(&mut self, t: usize) -> Result<Vec<f64>, SessionError> {
        self.get(t.wrapping_sub(1))
            .cloned()
            .ok_or_else(|| SessionError::Prespecified(format!("no prespecified update for step {t}")))
    }
}

/// Prediction files listed one per line in a descriptor; relative paths are
/// resolved against the descriptor's directory.
#[derive(Clone, Debug)]
pub struct FilePrespecSource {
    paths: Vec<PathBuf>,
}

impl FilePrespecSource {
    pub fn from_descriptor(path: &Path) -> Result<Self, SessionError> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let paths = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let p = PathBuf::from(l);
                if p.is_relative() {
                    base.join(p)
                } else {
                    p
                }
            })
            .collect();
        Ok(Self { paths })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

impl PrespecSource for FilePrespecSource {
    fn scores(&mut self, t: usize) -> Result<Vec<f64>, SessionError> {
        let path = self
            .paths
            .get(t.wrapping_sub(1))
            .ok_or_else(|| SessionError::Prespecified(format!("no prespecified update for step {t}")))?;
        Ok(read_predictions(path)?)
    }
}

/// Test-set labels, baseline scores and, for pres-srgp, the prespecified chain.
pub struct SessionInputs {
    pub labels: Vec<bool>,
    pub baseline: Vec<f64>,
    pub prespecified: Option<Box<dyn PrespecSource>>,
}

impl SessionInputs {
    pub fn new(labels: Vec<bool>, baseline: Vec<f64>) -> Self {
        Self {
            labels,
            baseline,
            prespecified: None,
        }
    }

    pub fn with_prespecified(mut self, source: Box<dyn PrespecSource>) -> Self {
        self.prespecified = Some(source);
        self
    }

    /// Loads the files named in the configuration.
    pub fn load(config: &SessionConfig) -> Result<Self, SessionError> {
        config.validate_files()?;
        let dataset = TestDataset::from_csv(config.dataset.as_ref().expect("validated"))?;
        let baseline = read_predictions(config.baseline.as_ref().expect("validated"))?;
        let prespecified = match &config.prespecified {
            Some(path) if config.policy.uses_prespecified_chain() => {
                let source = FilePrespecSource::from_descriptor(path)?;
                if source.len() < config.horizon {
                    return Err(SessionError::Prespecified(format!(
                        "descriptor lists {} updates but the horizon is {}",
                        source.len(),
                        config.horizon
                    )));
                }
                Some(Box::new(source) as Box<dyn PrespecSource>)
            }
            _ => None,
        };
        Ok(Self {
            labels: dataset.labels,
            baseline,
            prespecified,
        })
    }
}

/// Developer-visible progress of a session.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionStatus {
    pub policy: Policy,
    pub horizon: usize,
    pub submissions: usize,
    pub approvals: usize,
    /// Margin the next submission is tested against.
    pub delta: f64,
    pub exhausted: bool,
}

struct StreakMember {
    member: GroupMember,
    influence: Vec<f64>,
}

struct PrespecChain {
    source: Box<dyn PrespecSource>,
    influences: Vec<Vec<f64>>,
    critical_values: Vec<f64>,
}

/// Statistic of one submission in the orientation used by the threshold solvers.
struct TestOutcome {
    p_value: f64,
    /// Per-observation influence of the statistic, used for correlations.
    influence: Vec<f64>,
    detail: serde_json::Value,
}

/// A live approval session. The only developer-facing result of a submission
/// is the approve/deny bit; p-values and thresholds go to the audit log.
pub struct ApprovalSession {
    config: SessionConfig,
    labels: Vec<bool>,
    baseline: EvaluatedModel,
    graph: GraphSession<f64>,
    delta: f64,
    streak: Vec<StreakMember>,
    prespec: Option<PrespecChain>,
    records: Vec<ApprovalRecord>,
    audit: Option<AuditWriter>,
}

impl ApprovalSession {
    /// Opens an in-memory session without an audit file.
    pub fn open(config: SessionConfig, inputs: SessionInputs) -> Result<Self, SessionError> {
        config.validate()?;
        if config.policy.uses_prespecified_chain() && inputs.prespecified.is_none() {
            return Err(super::ConfigError::MissingPrespecified.into());
        }
        if inputs.baseline.len() != inputs.labels.len() {
            return Err(SessionError::Misaligned {
                expected: inputs.labels.len(),
                found: inputs.baseline.len(),
            });
        }
        let baseline = EvaluatedModel::evaluate(inputs.baseline, &inputs.labels)?;
        let graph = GraphSession::new(config.horizon, config.alpha, config.policy, config.weights.scheme()?)?;
        let prespec = if config.policy.uses_prespecified_chain() {
            inputs.prespecified.map(|source| PrespecChain {
                source,
                influences: Vec::new(),
                critical_values: Vec::new(),
            })
        } else {
            None
        };
        Ok(Self {
            delta: config.hypothesis.delta0,
            config,
            labels: inputs.labels,
            baseline,
            graph,
            streak: Vec::new(),
            prespec,
            records: Vec::new(),
            audit: None,
        })
    }

    /// Opens a session that writes a new audit log at `log_path`.
    pub fn open_logged(config: SessionConfig, inputs: SessionInputs, log_path: &Path) -> Result<Self, SessionError> {
        let mut session = Self::open(config, inputs)?;
        let header = AuditHeader {
            format: AUDIT_FORMAT,
            config: session.config.clone(),
            labels_digest: labels_digest(&session.labels),
            baseline_digest: scores_digest(&session.baseline.scores),
            created_ms: now_ms(),
        };
        session.audit = Some(AuditWriter::create(log_path, &header)?);
        Ok(session)
    }

    /// Rebuilds a session from its audit log, checking every stored digest and
    /// replaying every decision. Later submissions are appended to the same log.
    pub fn resume(
        log_path: &Path,
        load_inputs: impl FnOnce(&SessionConfig) -> Result<SessionInputs, SessionError>,
    ) -> Result<Self, SessionError> {
        let (header, steps) = read_audit_log(log_path)?;
        let inputs = load_inputs(&header.config)?;
        if labels_digest(&inputs.labels) != header.labels_digest {
            return Err(SessionError::InputMismatch("test set"));
        }
        if scores_digest(&inputs.baseline) != header.baseline_digest {
            return Err(SessionError::InputMismatch("baseline model"));
        }
        let mut session = Self::open(header.config, inputs)?;
        for record in &steps {
            if scores_digest(&record.scores) != record.digest {
                return Err(SessionError::DigestMismatch(record.t));
            }
            let replayed = session.decide(&record.scores)?;
            if replayed.decision != record.decision {
                return Err(SessionError::DecisionMismatch(record.t));
            }
            session.records.push(record.clone());
        }
        session.audit = Some(AuditWriter::open_append(log_path)?);
        Ok(session)
    }

    /// Tests one candidate model and returns whether it is approved.
    pub fn submit_model(&mut self, scores: &[f64]) -> Result<bool, SessionError> {
        let record = self.decide(scores)?;
        if let Some(audit) = self.audit.as_mut() {
            audit.append(&AuditEntry::Step(record.clone()))?;
        }
        let decision = record.decision;
        self.records.push(record);
        Ok(decision)
    }

    pub fn status(&self) -> SessionStatus {
        SessionStatus {
            policy: self.config.policy,
            horizon: self.config.horizon,
            submissions: self.graph.decisions().len(),
            approvals: self.graph.approvals(),
            delta: self.delta,
            exhausted: self.graph.is_exhausted(),
        }
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// Approve/deny bits so far.
    pub fn decisions(&self) -> &[bool] {
        self.graph.decisions()
    }

    /// Step table of the session. Internal columns are filled only when `unblind` is set.
    pub fn export_report(&self, unblind: bool) -> Report {
        Report::from_records(&self.config, &self.records, unblind)
    }

    fn engine(&self, t: usize, tag: u64) -> OrthantEngine {
        OrthantEngine::new(self.config.mc_budget, derive_seed(self.config.seed, t, tag))
    }

    fn test(&self, candidate: &EvaluatedModel) -> Result<TestOutcome, SessionError> {
        let h = &self.config.hypothesis;
        let auc_influence = || -> Vec<f64> {
            candidate
                .influence
                .iter()
                .zip(&self.baseline.influence)
                .map(|(a, b)| a - b)
                .collect()
        };
        Ok(match h.kind {
            HypothesisKind::AucImprovement => {
                let test = auc_difference_test(candidate, &self.baseline, self.delta)?;
                TestOutcome {
                    p_value: test.p_value,
                    influence: auc_influence(),
                    detail: json!({ "auc": test }),
                }
            }
            HypothesisKind::CalibrationBand => {
                let test = calibration_band_test(&candidate.scores, &self.labels, h.epsilon)?;
                // The binding side decides the direction of the statistic.
                let sign = if test.p_upper >= test.p_lower { -1.0 } else { 1.0 };
                let influence = candidate
                    .scores
                    .iter()
                    .zip(&self.labels)
                    .map(|(&s, &y)| sign * (s - if y { 1.0 } else { 0.0 }))
                    .collect();
                TestOutcome {
                    p_value: test.p_lower.max(test.p_upper),
                    influence,
                    detail: json!({ "calibration": test }),
                }
            }
            HypothesisKind::Composite => {
                let test = composite_test(candidate, &self.baseline, &self.labels, self.delta, h.epsilon)?;
                TestOutcome {
                    p_value: test.effective_p,
                    influence: auc_influence(),
                    detail: json!({ "composite": test }),
                }
            }
        })
    }

    fn threshold(
        &mut self,
        t: usize,
        weight: f64,
        influence: &[f64],
    ) -> Result<(f64, serde_json::Value), SessionError> {
        let alpha = self.config.alpha;
        Ok(match self.config.policy {
            Policy::BinaryNaive => (alpha, serde_json::Value::Null),
            Policy::Bonferroni => {
                let nodes = 2f64.powi(self.config.horizon as i32) - 1.0;
                (alpha / nodes, serde_json::Value::Null)
            }
            Policy::BonfSrgp => (weight * alpha, serde_json::Value::Null),
            Policy::FsSrgp => {
                let mut vectors: Vec<Vec<f64>> = self.streak.iter().map(|m| m.influence.clone()).collect();
                vectors.push(influence.to_vec());
                let estimate = correlation_matrix(&vectors)?;
                let group = GroupState {
                    members: self.streak.iter().map(|m| m.member).collect(),
                    correlation: estimate.block,
                };
                let solution =
                    fixed_sequence_threshold(&group, weight.clamp(0.0, 1.0), alpha, &self.engine(t, SEED_TAG_ADAPTIVE))?;
                (solution.value, json!({ "streak_length": self.streak.len(), "solver": solution }))
            }
            Policy::PresSrgp => {
                let (critical, adaptive) = self.prespec_thresholds(t, weight, influence)?;
                (adaptive.value, json!({ "prespecified": critical, "solver": adaptive }))
            }
        })
    }

    fn prespec_thresholds(
        &mut self,
        t: usize,
        weight: f64,
        influence: &[f64],
    ) -> Result<(ThresholdSolution, ThresholdSolution), SessionError> {
        let alpha = self.config.alpha;
        let w_pres = self.graph.prespec_weight(t)?;
        let critical_engine = self.engine(t, SEED_TAG_PRESPEC);
        let adaptive_engine = self.engine(t, SEED_TAG_ADAPTIVE);
        let missing = || SessionError::Config(super::ConfigError::MissingPrespecified);
        let scores = self.prespec.as_mut().ok_or_else(missing)?.source.scores(t)?;
        let model = EvaluatedModel::evaluate(scores, &self.labels)?;
        // The prespecified deviation is taken on the same scale as the tested
        // statistic (improvement over the baseline for AUC hypotheses).
        let pres_influence = self.test(&model)?.influence;
        let chain = self.prespec.as_mut().ok_or_else(missing)?;
        chain.influences.truncate(t - 1);
        chain.influences.push(pres_influence);
        chain.critical_values.truncate(t - 1);
        let indices: Vec<usize> = (0..t).collect();
        let mut vectors = chain.influences.clone();
        vectors.push(influence.to_vec());
        let joint = correlation_matrix(&vectors)?.block;
        let chain_corr = joint.select(&indices);
        let critical_state = PrespecState {
            critical_values: chain.critical_values.clone(),
            correlation: chain_corr.clone(),
        };
        let critical = prespec_critical_value(&critical_state, t, w_pres.clamp(0.0, 1.0), alpha, &critical_engine)?;
        chain.critical_values.push(critical.value);
        let rho_cross: Vec<f64> = (0..t).map(|i| joint.get(t, i)).collect();
        let state = PrespecState {
            critical_values: chain.critical_values[..t].to_vec(),
            correlation: chain_corr,
        };
        let adaptive = prespec_adaptive_threshold(&state, weight.clamp(0.0, 1.0), alpha, &rho_cross, &adaptive_engine)?;
        Ok((critical, adaptive))
    }

    /// Runs one test and advances the graph; does not touch the audit file.
    fn decide(&mut self, scores: &[f64]) -> Result<ApprovalRecord, SessionError> {
        let history = self
            .graph
            .current_history()
            .ok_or(SessionError::Exhausted(self.config.horizon))?;
        if scores.len() != self.labels.len() {
            return Err(SessionError::Misaligned {
                expected: self.labels.len(),
                found: scores.len(),
            });
        }
        let t = history.time();
        let candidate = EvaluatedModel::evaluate(scores.to_vec(), &self.labels)?;
        let outcome = self.test(&candidate)?;
        let weight = self.graph.current_weight();
        let (threshold, solver) = self.threshold(t, weight, &outcome.influence)?;
        let decision = outcome.p_value <= threshold && outcome.p_value < 1.0;
        let step = self.graph.advance(decision)?;
        let delta = self.delta;
        if decision {
            self.delta += self.config.hypothesis.delta_increment;
            self.streak.clear();
        } else {
            self.streak.push(StreakMember {
                member: GroupMember { threshold, weight },
                influence: outcome.influence,
            });
        }
        Ok(ApprovalRecord {
            t,
            history,
            policy: self.config.policy,
            node_weight: weight,
            threshold,
            p_value: outcome.p_value,
            decision,
            tau: step.tau,
            delta,
            digest: scores_digest(scores),
            timestamp_ms: now_ms(),
            scores: scores.to_vec(),
            diagnostics: json!({ "test": outcome.detail, "threshold": solver }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<bool> {
        (0..60).map(|i| (i * 7) % 5 < 2).collect()
    }

    fn noisy(labels: &[bool], signal: f64, salt: u64) -> Vec<f64> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let h = derive_seed(salt, i, 9) as f64 / u64::MAX as f64;
                let v = if y { signal } else { 0.0 } + h;
                1.0 / (1.0 + (-v).exp())
            })
            .collect()
    }

    #[test]
    fn baseline_resubmission_is_denied() {
        let y = labels();
        let base = noisy(&y, 0.3, 1);
        let mut s = ApprovalSession::open(
            SessionConfig::new(0.1, 3, Policy::Bonferroni),
            SessionInputs::new(y.clone(), base.clone()),
        )
        .unwrap();
        assert!(!s.submit_model(&base).unwrap());
        assert_eq!(s.status().submissions, 1);
    }

    #[test]
    fn naive_policy_uses_full_alpha() {
        let y = labels();
        let base = noisy(&y, 0.0, 1);
        let better = noisy(&y, 1.0, 2);
        let mut s =
            ApprovalSession::open(SessionConfig::new(1.0, 2, Policy::BinaryNaive), SessionInputs::new(y, base)).unwrap();
        assert!(s.submit_model(&better).unwrap());
        assert_eq!(s.records[0].threshold, 1.0);
        assert_eq!(s.status().delta, 0.01);
    }

    #[test]
    fn exhausted_and_misaligned() {
        let y = labels();
        let base = noisy(&y, 0.3, 1);
        let mut s = ApprovalSession::open(
            SessionConfig::new(0.1, 1, Policy::BonfSrgp),
            SessionInputs::new(y, base.clone()),
        )
        .unwrap();
        assert!(matches!(
            s.submit_model(&base[..10]),
            Err(SessionError::Misaligned { expected: 60, found: 10 })
        ));
        s.submit_model(&base).unwrap();
        assert!(matches!(s.submit_model(&base), Err(SessionError::Exhausted(1))));
    }

    #[test]
    fn pres_requires_chain() {
        let y = labels();
        let base = noisy(&y, 0.3, 1);
        let err = ApprovalSession::open(SessionConfig::new(0.1, 3, Policy::PresSrgp), SessionInputs::new(y, base));
        assert!(matches!(err, Err(SessionError::Config(super::super::ConfigError::MissingPrespecified))));
    }

    #[test]
    fn seeds_differ_by_step_and_tag() {
        assert_ne!(derive_seed(1, 1, 1), derive_seed(1, 2, 1));
        assert_ne!(derive_seed(1, 1, 1), derive_seed(1, 1, 2));
        assert_ne!(derive_seed(1, 1, 1), derive_seed(2, 1, 1));
        assert_eq!(derive_seed(5, 3, 1), derive_seed(5, 3, 1));
    }
}
