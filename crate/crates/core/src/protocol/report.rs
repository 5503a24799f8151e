use std::io::Write;

use serde::{Deserialize, Serialize};

use super::audit::ApprovalRecord;
use super::config::SessionConfig;
use crate::policy::Policy;

/// One row of the step table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub step: usize,
    pub decision: bool,
    pub delta: f64,
    pub cumulative_approvals: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
}

/// Per-step decisions and the final margin. Timestamps are left out so that
/// identical sessions produce identical reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub policy: Policy,
    pub alpha: f64,
    pub horizon: usize,
    pub unblinded: bool,
    pub submissions: usize,
    pub approvals: usize,
    pub final_delta: f64,
    /// Improvement margin established by the approvals, equal to the final margin.
    pub detected_improvement: f64,
    pub steps: Vec<ReportRow>,
}

impl Report {
    pub fn from_records(config: &SessionConfig, records: &[ApprovalRecord], unblind: bool) -> Self {
        let mut approvals = 0;
        let steps: Vec<ReportRow> = records
            .iter()
            .map(|r| {
                approvals += r.decision as usize;
                ReportRow {
                    step: r.t,
                    decision: r.decision,
                    delta: r.delta,
                    cumulative_approvals: approvals,
                    node_weight: unblind.then_some(r.node_weight),
                    threshold: unblind.then_some(r.threshold),
                    p_value: unblind.then_some(r.p_value),
                }
            })
            .collect();
        let h = &config.hypothesis;
        let final_delta = h.delta0 + approvals as f64 * h.delta_increment;
        Self {
            policy: config.policy,
            alpha: config.alpha,
            horizon: config.horizon,
            unblinded: unblind,
            submissions: steps.len(),
            approvals,
            final_delta,
            detected_improvement: final_delta,
            steps,
        }
    }

    /// Step table as CSV; the internal columns appear only when unblinded.
    pub fn write_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step", "decision", "delta", "cumulative_approvals"];
        if self.unblinded {
            header.extend(["node_weight", "threshold", "p_value"]);
        }
        w.write_record(&header)?;
        for row in &self.steps {
            let mut fields = vec![
                row.step.to_string(),
                (row.decision as u8).to_string(),
                row.delta.to_string(),
                row.cumulative_approvals.to_string(),
            ];
            if self.unblinded {
                for v in [row.node_weight, row.threshold, row.p_value] {
                    fields.push(v.map_or_else(String::new, |x| x.to_string()));
                }
            }
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
