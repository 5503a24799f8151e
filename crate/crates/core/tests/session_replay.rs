use std::fs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use srgp::protocol::{read_audit_log, SessionInputs};
use srgp::{ApprovalSession, Policy, SessionConfig, SessionError};

struct Fixture {
    labels: Vec<bool>,
    baseline: Vec<f64>,
    candidates: Vec<Vec<f64>>,
    prespecified: Vec<Vec<f64>>,
}

/// Candidates drift from a weak baseline towards the signal.
fn fixture(n: usize, horizon: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let signal: Vec<f64> = labels.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();
    let noise: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let model = |strength: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        signal
            .iter()
            .zip(&noise)
            .map(|(s, e)| strength * s + e + 0.3 * rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    let baseline = model(0.3, &mut rng);
    let candidates = (0..horizon + 1).map(|t| model(0.3 + 0.15 * t as f64, &mut rng)).collect();
    let prespecified = (0..horizon).map(|t| model(0.3 + 0.12 * t as f64, &mut rng)).collect();
    Fixture {
        labels,
        baseline,
        candidates,
        prespecified,
    }
}

fn inputs(f: &Fixture) -> SessionInputs {
    SessionInputs::new(f.labels.clone(), f.baseline.clone()).with_prespecified(Box::new(f.prespecified.clone()))
}

fn config(policy: Policy, horizon: usize) -> SessionConfig {
    let mut c = SessionConfig::new(0.1, horizon, policy);
    c.mc_budget = 1 << 12;
    c.seed = 99;
    c
}

#[test]
fn submit_model_signature() {
    let _: fn(&mut ApprovalSession, &[f64]) -> Result<bool, SessionError> = ApprovalSession::submit_model;
}

#[test]
fn resumed_session_matches_uninterrupted_run() {
    let horizon = 8;
    let f = fixture(300, horizon, 1);
    for policy in Policy::ALL {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("audit.jsonl");
        let mut straight = ApprovalSession::open(config(policy, horizon), inputs(&f)).unwrap();
        let expected: Vec<bool> = f.candidates[..horizon]
            .iter()
            .map(|c| straight.submit_model(c).unwrap())
            .collect();

        if policy == Policy::BinaryNaive {
            assert!(expected.iter().filter(|&&d| d).count() >= 2, "fixture should produce approvals");
        }
        let mut first = ApprovalSession::open_logged(config(policy, horizon), inputs(&f), &log).unwrap();
        for c in &f.candidates[..3] {
            first.submit_model(c).unwrap();
        }
        drop(first);
        let mut resumed = ApprovalSession::resume(&log, |_| Ok(inputs(&f))).unwrap();
        assert_eq!(resumed.decisions(), &expected[..3]);
        for c in &f.candidates[3..horizon] {
            resumed.submit_model(c).unwrap();
        }
        assert_eq!(resumed.decisions(), &expected[..], "{policy}");
        assert!(matches!(
            resumed.submit_model(&f.candidates[horizon]),
            Err(SessionError::Exhausted(_))
        ));

        let blind = straight.export_report(false);
        let again = resumed.export_report(false);
        assert_eq!(blind.to_json(), again.to_json());

        // The unblinded report carries exactly the audit-log numbers.
        let (_, steps) = read_audit_log(&log).unwrap();
        let report = resumed.export_report(true);
        assert_eq!(report.steps.len(), steps.len());
        for (row, rec) in report.steps.iter().zip(&steps) {
            assert_eq!(row.step, rec.t);
            assert_eq!(row.decision, rec.decision);
            assert_eq!(row.threshold, Some(rec.threshold));
            assert_eq!(row.p_value, Some(rec.p_value));
            assert_eq!(row.node_weight, Some(rec.node_weight));
        }
        assert_eq!(report.approvals, expected.iter().filter(|&&d| d).count());
    }
}

#[test]
fn tampered_scores_are_detected() {
    let f = fixture(200, 4, 2);
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("audit.jsonl");
    let mut s = ApprovalSession::open_logged(config(Policy::BonfSrgp, 4), inputs(&f), &log).unwrap();
    s.submit_model(&f.candidates[0]).unwrap();
    s.submit_model(&f.candidates[1]).unwrap();
    drop(s);
    let text = fs::read_to_string(&log).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut entry: serde_json::Value = serde_json::from_str(&lines[2]).unwrap();
    entry["scores"][0] = serde_json::json!(123.0);
    lines[2] = entry.to_string();
    fs::write(&log, lines.join("\n") + "\n").unwrap();
    assert!(matches!(
        ApprovalSession::resume(&log, |_| Ok(inputs(&f))),
        Err(SessionError::DigestMismatch(2))
    ));
}

#[test]
fn flipped_decision_is_detected() {
    let f = fixture(200, 4, 3);
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("audit.jsonl");
    let mut s = ApprovalSession::open_logged(config(Policy::BinaryNaive, 4), inputs(&f), &log).unwrap();
    s.submit_model(&f.candidates[2]).unwrap();
    drop(s);
    let text = fs::read_to_string(&log).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut entry: serde_json::Value = serde_json::from_str(&lines[1]).unwrap();
    let d = entry["decision"].as_bool().unwrap();
    entry["decision"] = serde_json::json!(!d);
    lines[1] = entry.to_string();
    fs::write(&log, lines.join("\n") + "\n").unwrap();
    assert!(matches!(
        ApprovalSession::resume(&log, |_| Ok(inputs(&f))),
        Err(SessionError::DecisionMismatch(1))
    ));
}

#[test]
fn empty_or_foreign_logs_are_rejected() {
    let f = fixture(100, 3, 4);
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("audit.jsonl");
    fs::write(&log, "").unwrap();
    assert!(matches!(
        ApprovalSession::resume(&log, |_| Ok(inputs(&f))),
        Err(SessionError::CorruptLog(_))
    ));

    let log2 = dir.path().join("other.jsonl");
    let s = ApprovalSession::open_logged(config(Policy::BonfSrgp, 3), inputs(&f), &log2).unwrap();
    drop(s);
    let mut other = fixture(100, 3, 4);
    other.baseline[0] += 1.0;
    assert!(matches!(
        ApprovalSession::resume(&log2, |_| Ok(inputs(&other))),
        Err(SessionError::InputMismatch(_))
    ));
    // An existing log is never overwritten.
    assert!(ApprovalSession::open_logged(config(Policy::BonfSrgp, 3), inputs(&f), &log2).is_err());
}

#[test]
fn same_seed_gives_identical_logs() {
    let f = fixture(250, 6, 5);
    let run = || {
        let mut s = ApprovalSession::open(config(Policy::PresSrgp, 6), inputs(&f)).unwrap();
        for c in &f.candidates[..6] {
            s.submit_model(c).unwrap();
        }
        s.export_report(true).to_json()
    };
    assert_eq!(run(), run());
}

#[test]
fn blinded_report_hides_statistics() {
    let f = fixture(150, 3, 6);
    let mut s = ApprovalSession::open(config(Policy::FsSrgp, 3), inputs(&f)).unwrap();
    for c in &f.candidates[..3] {
        s.submit_model(c).unwrap();
    }
    let mut csv = Vec::new();
    s.export_report(false).write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "step,decision,delta,cumulative_approvals");
    let json = s.export_report(false).to_json();
    assert!(!json.contains("p_value") && !json.contains("threshold"));
}
