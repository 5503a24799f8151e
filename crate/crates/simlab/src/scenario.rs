//! Scenario configuration, read from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};
use srgp::protocol::{HypothesisSettings, WeightSettings};
use srgp::stats::HypothesisKind;
use srgp::Policy;

use crate::developer::GateSettings;
use crate::model::FitSettings;
use crate::population::PopulationSpec;
use crate::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Every submission is a perturbation of the oracle, so any approval is false.
    Adversarial,
    /// Honest refits on a growing IID stream, gated by a power calculation.
    Refitting,
    /// Refits whose scores carry a decaying calibration offset, tested with
    /// the calibration-plus-AUC composite hypothesis.
    Composite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdversarialSettings {
    /// Size of each coefficient perturbation.
    pub step: f64,
}

impl Default for AdversarialSettings {
    fn default() -> Self {
        Self { step: 0.6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefittingSettings {
    /// Observations used to train the initial model.
    pub initial_size: usize,
    /// Stream length after the initial observations, one observation per tick.
    pub max_ticks: usize,
    /// Margin step of the prespecified chain: its `j`-th margin is `step * (j - 1)`.
    pub prespec_delta_step: f64,
    pub gate: GateSettings,
    pub fit: FitSettings,
}

impl Default for RefittingSettings {
    fn default() -> Self {
        Self {
            initial_size: 250,
            max_ticks: 750,
            prespec_delta_step: 0.0025,
            gate: GateSettings::default(),
            fit: FitSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompositeSettings {
    /// Logit offset added to every refit at tick 0.
    pub initial_offset: f64,
    /// Multiplicative decay of the offset per tick.
    pub offset_decay: f64,
}

impl Default for CompositeSettings {
    fn default() -> Self {
        Self {
            initial_offset: 0.8,
            offset_decay: 0.98,
        }
    }
}

impl CompositeSettings {
    pub fn offset(&self, tick: usize) -> f64 {
        self.initial_offset * self.offset_decay.powi(tick as i32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub replicates: usize,
    /// Rows of the reusable test set.
    pub test_size: usize,
    pub horizon: usize,
    pub alpha: f64,
    pub policies: Vec<Policy>,
    #[serde(default)]
    pub seed: u64,
    /// Mixed into the seed of every training stream.
    #[serde(default)]
    pub stream_seed: u64,
    #[serde(default = "default_budget")]
    pub mc_budget: usize,
    #[serde(default)]
    pub weights: WeightSettings,
    #[serde(default)]
    pub hypothesis: HypothesisSettings,
    #[serde(default)]
    pub population: PopulationSpec,
    #[serde(default)]
    pub adversarial: AdversarialSettings,
    #[serde(default)]
    pub refitting: RefittingSettings,
    #[serde(default)]
    pub composite: CompositeSettings,
}

/// Simulations run thousands of solves, so they default to a smaller
/// lattice than live sessions; the noise guard keeps thresholds valid.
fn default_budget() -> usize {
    1 << 12
}

impl ScenarioConfig {
    /// The adversarial study: n = 100 test rows, every policy.
    pub fn adversarial(replicates: usize, horizon: usize) -> Self {
        Self {
            kind: ScenarioKind::Adversarial,
            replicates,
            test_size: 100,
            horizon,
            alpha: 0.1,
            policies: Policy::ALL.to_vec(),
            seed: 0,
            stream_seed: 0,
            mc_budget: default_budget(),
            weights: WeightSettings::default(),
            hypothesis: HypothesisSettings::default(),
            population: PopulationSpec::default(),
            adversarial: AdversarialSettings::default(),
            refitting: RefittingSettings::default(),
            composite: CompositeSettings::default(),
        }
    }

    /// The power study: n = 800 test rows, T = 15.
    pub fn refitting(replicates: usize) -> Self {
        Self {
            kind: ScenarioKind::Refitting,
            test_size: 800,
            horizon: 15,
            policies: vec![Policy::Bonferroni, Policy::BonfSrgp, Policy::FsSrgp, Policy::PresSrgp],
            ..Self::adversarial(replicates, 15)
        }
    }

    /// Composite-hypothesis stand-in for the clinical study.
    pub fn composite(replicates: usize) -> Self {
        let mut c = Self::refitting(replicates);
        c.kind = ScenarioKind::Composite;
        c.hypothesis.kind = HypothesisKind::Composite;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let config: Self = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.replicates == 0 {
            return bad("replicates must be positive".into());
        }
        if self.test_size < 2 {
            return bad("test_size must be at least 2".into());
        }
        if self.policies.is_empty() {
            return bad("at least one policy is required".into());
        }
        self.population.validate()?;
        let mut session = srgp::SessionConfig::new(self.alpha, self.horizon, self.policies[0]);
        session.weights = self.weights.clone();
        session.hypothesis = self.hypothesis.clone();
        session.mc_budget = self.mc_budget;
        session.validate().map_err(|e| SimError::Config(e.to_string()))?;
        match self.kind {
            ScenarioKind::Adversarial => {
                if self.population.coefficients.iter().all(|&c| c != 0.0) {
                    return bad("the adversarial developer needs at least one zero coefficient".into());
                }
            }
            ScenarioKind::Refitting | ScenarioKind::Composite => {
                let r = &self.refitting;
                if r.initial_size < 2 || r.max_ticks == 0 {
                    return bad("refitting needs initial_size >= 2 and max_ticks >= 1".into());
                }
                if !(r.gate.confidence > 0.5 && r.gate.confidence < 1.0) {
                    return bad("gate confidence must lie in (0.5, 1)".into());
                }
            }
        }
        if self.kind == ScenarioKind::Composite && self.hypothesis.kind != HypothesisKind::Composite {
            return bad("the composite scenario requires hypothesis.kind = \"composite\"".into());
        }
        Ok(())
    }
}
