//! Result files: a JSON summary, one CSV row per replicate and policy, and a
//! long-format trajectory CSV for plotting.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::runner::ScenarioResult;
use crate::SimError;

pub const SUMMARY_FILE: &str = "summary.json";
pub const REPLICATES_FILE: &str = "replicates.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";

#[derive(Serialize)]
struct ReplicateRow<'a> {
    replicate: usize,
    policy: &'a str,
    submissions: usize,
    approvals: usize,
    false_approvals: usize,
    any_false_approval: bool,
    final_delta: f64,
    baseline_true_auc: f64,
    final_true_auc: f64,
    /// Released bits as a string of 0/1.
    decisions: String,
}

#[derive(Serialize)]
struct TrajectoryRow<'a> {
    replicate: usize,
    policy: &'a str,
    step: usize,
    /// Empty when no submission was made at this step.
    decision: Option<u8>,
    cumulative_approvals: usize,
    true_auc: f64,
    test_auc: f64,
}

/// The JSON summary: scenario settings, per-policy aggregates and a
/// `fwer` object keyed by policy name.
pub fn summary_json(result: &ScenarioResult) -> Value {
    let c = &result.config;
    let fwer: Map<String, Value> = result
        .summaries
        .iter()
        .map(|s| (s.policy.name().to_string(), json!(s.fwer)))
        .collect();
    json!({
        "kind": c.kind,
        "replicates": c.replicates,
        "test_size": c.test_size,
        "horizon": c.horizon,
        "alpha": c.alpha,
        "seed": c.seed,
        "mc_budget": c.mc_budget,
        "fwer": fwer,
        "policies": result.summaries,
    })
}

pub fn write_outputs(result: &ScenarioResult, dir: &Path) -> Result<(), SimError> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&summary_json(result))?;
    text.push('\n');
    fs::write(dir.join(SUMMARY_FILE), text)?;

    let mut w = csv::Writer::from_path(dir.join(REPLICATES_FILE))?;
    for r in &result.replicates {
        w.serialize(ReplicateRow {
            replicate: r.replicate,
            policy: r.policy.name(),
            submissions: r.submissions,
            approvals: r.approvals,
            false_approvals: r.false_approvals,
            any_false_approval: r.any_false_approval,
            final_delta: r.final_delta,
            baseline_true_auc: r.baseline_true_auc,
            final_true_auc: r.final_true_auc(),
            decisions: r.decisions.iter().map(|&d| if d { '1' } else { '0' }).collect(),
        })?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(TRAJECTORIES_FILE))?;
    for r in &result.replicates {
        let mut cumulative = 0;
        for (i, (&t, &s)) in r.true_auc.iter().zip(&r.test_auc).enumerate() {
            let decision = r.decisions.get(i).copied();
            cumulative += usize::from(decision == Some(true));
            w.serialize(TrajectoryRow {
                replicate: r.replicate,
                policy: r.policy.name(),
                step: i + 1,
                decision: decision.map(u8::from),
                cumulative_approvals: cumulative,
                true_auc: t,
                test_auc: s,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
