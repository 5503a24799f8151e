use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Threshold policy used to decide each submission.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Every test at the full level. Does not control the family-wise error rate.
    BinaryNaive,
    /// Uniform Bonferroni correction over all `2^T - 1` nodes of the approval tree.
    Bonferroni,
    /// Weighted Bonferroni with alpha-recycling along the tree.
    BonfSrgp,
    /// Alpha-recycling with correlation-aware fixed-sequence tests inside each failure streak.
    FsSrgp,
    /// Alpha-recycling that also spends alpha on a prespecified chain of hypothetical updates.
    PresSrgp,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::BinaryNaive,
        Policy::Bonferroni,
        Policy::BonfSrgp,
        Policy::FsSrgp,
        Policy::PresSrgp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::BinaryNaive => "binary-naive",
            Policy::Bonferroni => "bonferroni",
            Policy::BonfSrgp => "bonf-srgp",
            Policy::FsSrgp => "fs-srgp",
            Policy::PresSrgp => "pres-srgp",
        }
    }

    pub fn uses_prespecified_chain(self) -> bool {
        matches!(self, Policy::PresSrgp)
    }

    /// Whether the policy controls the family-wise error rate at its nominal level.
    pub fn controls_fwer(self) -> bool {
        !matches!(self, Policy::BinaryNaive)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown policy `{0}` (expected one of binary-naive, bonferroni, bonf-srgp, fs-srgp, pres-srgp)")]
pub struct UnknownPolicy(pub String);

impl FromStr for Policy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownPolicy(s.to_string()))
    }
}
