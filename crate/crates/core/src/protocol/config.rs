use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::WeightScheme;
use crate::policy::Policy;
use crate::stats::HypothesisKind;
use crate::thresholds::orthant::DEFAULT_BUDGET;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("alpha must lie in (0, 1], got {0}")]
    Alpha(f64),
    #[error("horizon must allow at least one test")]
    EmptyHorizon,
    #[error("horizon {0} is too large (at most 1000 tests)")]
    HorizonTooLarge(usize),
    #[error("invalid weight scheme: {0}")]
    Weights(String),
    #[error("invalid hypothesis settings: {0}")]
    Hypothesis(String),
    #[error("Monte Carlo budget must be at least 16 points, got {0}")]
    Budget(usize),
    #[error("the pres-srgp policy needs a prespecified update descriptor")]
    MissingPrespecified,
    #[error("missing `{0}` path")]
    MissingPath(&'static str),
    #[error("cannot parse configuration: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSettings {
    #[serde(default = "default_node_decay")]
    pub node_decay: f64,
    #[serde(default = "default_edge")]
    pub edge_success: f64,
    #[serde(default = "default_edge")]
    pub edge_decay: f64,
    #[serde(default = "default_prespec_fraction")]
    pub prespec_fraction: f64,
}

fn default_node_decay() -> f64 {
    0.2
}
fn default_edge() -> f64 {
    0.8
}
fn default_prespec_fraction() -> f64 {
    0.2
}

impl Default for WeightSettings {
    fn default() -> Self {
        Self {
            node_decay: default_node_decay(),
            edge_success: default_edge(),
            edge_decay: default_edge(),
            prespec_fraction: default_prespec_fraction(),
        }
    }
}

impl WeightSettings {
    pub fn scheme(&self) -> Result<WeightScheme<f64>, ConfigError> {
        WeightScheme::new(self.node_decay, self.edge_success, self.edge_decay, self.prespec_fraction)
            .map_err(|e| ConfigError::Weights(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisSettings {
    #[serde(default = "default_kind")]
    pub kind: HypothesisKind,
    /// Margin of the first AUC improvement test.
    #[serde(default)]
    pub delta0: f64,
    /// Added to the margin after every approval.
    #[serde(default = "default_increment")]
    pub delta_increment: f64,
    /// Half-width of the calibration band.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_kind() -> HypothesisKind {
    HypothesisKind::AucImprovement
}
fn default_increment() -> f64 {
    0.01
}
fn default_epsilon() -> f64 {
    0.05
}

impl Default for HypothesisSettings {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            delta0: 0.0,
            delta_increment: default_increment(),
            epsilon: default_epsilon(),
        }
    }
}

/// Everything that determines the behavior of an approval session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub alpha: f64,
    pub horizon: usize,
    pub policy: Policy,
    #[serde(default)]
    pub weights: WeightSettings,
    #[serde(default)]
    pub hypothesis: HypothesisSettings,
    #[serde(default = "default_budget")]
    pub mc_budget: usize,
    #[serde(default)]
    pub seed: u64,
    /// Test set CSV with a `label` column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// Baseline model scores, one per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<PathBuf>,
    /// Text file listing the prediction files of the prespecified updates, one per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prespecified: Option<PathBuf>,
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

impl SessionConfig {
    pub fn new(alpha: f64, horizon: usize, policy: Policy) -> Self {
        Self {
            alpha,
            horizon,
            policy,
            weights: WeightSettings::default(),
            hypothesis: HypothesisSettings::default(),
            mc_budget: DEFAULT_BUDGET,
            seed: 0,
            dataset: None,
            baseline: None,
            prespecified: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks ranges that do not involve files.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(ConfigError::Alpha(self.alpha));
        }
        if self.horizon == 0 {
            return Err(ConfigError::EmptyHorizon);
        }
        if self.horizon > 1000 {
            return Err(ConfigError::HorizonTooLarge(self.horizon));
        }
        self.weights.scheme()?;
        let h = &self.hypothesis;
        if !(h.delta0.is_finite() && h.delta0 >= 0.0) {
            return Err(ConfigError::Hypothesis(format!("delta0 must be nonnegative, got {}", h.delta0)));
        }
        if !(h.delta_increment.is_finite() && h.delta_increment >= 0.0) {
            return Err(ConfigError::Hypothesis(format!(
                "delta_increment must be nonnegative, got {}",
                h.delta_increment
            )));
        }
        if !(h.epsilon.is_finite() && h.epsilon > 0.0) {
            return Err(ConfigError::Hypothesis(format!("epsilon must be positive, got {}", h.epsilon)));
        }
        if self.mc_budget < 16 {
            return Err(ConfigError::Budget(self.mc_budget));
        }
        Ok(())
    }

    /// Validation for sessions driven from files: dataset, baseline and, for
    /// pres-srgp, the prespecified descriptor must be named.
    pub fn validate_files(&self) -> Result<(), ConfigError> {
        self.validate()?;
        if self.dataset.is_none() {
            return Err(ConfigError::MissingPath("dataset"));
        }
        if self.baseline.is_none() {
            return Err(ConfigError::MissingPath("baseline"));
        }
        if self.policy.uses_prespecified_chain() && self.prespecified.is_none() {
            return Err(ConfigError::MissingPrespecified);
        }
        Ok(())
    }

    /// Resolves relative paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.dataset, &mut self.baseline, &mut self.prespecified].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml_gets_defaults() {
        let c = SessionConfig::from_toml("alpha = 0.1\nhorizon = 5\npolicy = \"bonf-srgp\"\n").unwrap();
        assert_eq!(c.policy, Policy::BonfSrgp);
        assert_eq!(c.weights, WeightSettings::default());
        assert_eq!(c.hypothesis.delta_increment, 0.01);
        assert_eq!(c.mc_budget, 1 << 17);
        c.validate().unwrap();
        let back = SessionConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn invalid_configs() {
        let mut c = SessionConfig::new(0.1, 0, Policy::Bonferroni);
        assert_eq!(c.validate(), Err(ConfigError::EmptyHorizon));
        c.horizon = 3;
        c.alpha = 1.5;
        assert_eq!(c.validate(), Err(ConfigError::Alpha(1.5)));
        c.alpha = 0.1;
        c.weights.edge_success = 1.0;
        assert!(matches!(c.validate(), Err(ConfigError::Weights(_))));
        assert!(SessionConfig::from_toml("alpha = 0.1\nhorizon = 5\npolicy = \"holm\"\n").is_err());
        assert!(SessionConfig::from_toml("alpha = 0.1\nhorizon = 5\npolicy = \"bonferroni\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn pres_needs_descriptor() {
        let mut c = SessionConfig::new(0.1, 3, Policy::PresSrgp);
        c.dataset = Some("d.csv".into());
        c.baseline = Some("b.txt".into());
        assert_eq!(c.validate_files(), Err(ConfigError::MissingPrespecified));
        c.prespecified = Some("p.txt".into());
        c.validate_files().unwrap();
        c.resolve_paths(Path::new("/base"));
        assert_eq!(c.dataset.as_deref(), Some(Path::new("/base/d.csv")));
    }
}
