use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use srgp::stats::{
    auc_difference_test, auc_influence_values, composite_test, empirical_auc, statistic_correlation,
    EvaluatedModel,
};
use srgp_oracles::auc::{delong_difference_variance, delong_variance, pair_count_auc};

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Labels with both classes and scores shifted up for positives.
fn binormal(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> (Vec<f64>, Vec<bool>) {
    let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
    labels[0] = true;
    labels[1] = false;
    let scores = labels
        .iter()
        .map(|&y| rng.sample::<f64, _>(StandardNormal) + if y { shift } else { 0.0 })
        .collect();
    (scores, labels)
}

#[test]
fn auc_equals_pair_count_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..100 {
        let n = rng.gen_range(2..=200);
        let (mut scores, labels) = binormal(&mut rng, n, 0.8);
        if i % 2 == 0 {
            // Coarse scores so ties are common.
            scores.iter_mut().for_each(|s| *s = (*s * 2.0).round());
        }
        assert_eq!(empirical_auc(&scores, &labels).unwrap(), pair_count_auc(&scores, &labels));
    }
}

#[test]
fn influence_variance_matches_delong() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (scores, labels) = binormal(&mut rng, 500, 1.0);
    let phi = auc_influence_values(&scores, &labels).unwrap();
    let ours = variance(&phi) / 500.0;
    let theirs = delong_variance(&scores, &labels);
    assert!((ours / theirs - 1.0).abs() < 0.1, "{ours} vs {theirs}");

    let other: Vec<f64> = scores.iter().map(|s| s + 0.7 * rng.sample::<f64, _>(StandardNormal)).collect();
    let a = EvaluatedModel::evaluate(scores.clone(), &labels).unwrap();
    let b = EvaluatedModel::evaluate(other.clone(), &labels).unwrap();
    let test = auc_difference_test(&a, &b, 0.0).unwrap();
    let theirs = delong_difference_variance(&scores, &other, &labels);
    assert!((test.std_error.powi(2) / theirs - 1.0).abs() < 0.1);
}

#[test]
fn influence_values_have_mean_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (scores, labels) = binormal(&mut rng, 300, 0.5);
    let phi = auc_influence_values(&scores, &labels).unwrap();
    assert!(phi.iter().sum::<f64>().abs() < 1e-9);
}

#[test]
fn null_difference_rejects_at_nominal_rate() {
    // Two noisy copies of the same signal have equal AUC; at delta = 0 the
    // one-sided test should reject about alpha of the time.
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let reps = 400;
    let mut rejections = 0;
    for _ in 0..reps {
        let (signal, labels) = binormal(&mut rng, 300, 1.0);
        let noisy = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            signal.iter().map(|s| s + rng.sample::<f64, _>(StandardNormal)).collect()
        };
        let a = EvaluatedModel::evaluate(noisy(&mut rng), &labels).unwrap();
        let b = EvaluatedModel::evaluate(noisy(&mut rng), &labels).unwrap();
        if auc_difference_test(&a, &b, 0.0).unwrap().p_value <= 0.1 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / reps as f64;
    assert!((0.05..=0.15).contains(&rate), "{rate}");
}

#[test]
fn estimated_correlation_matches_sampling_correlation() {
    // Candidates a and c share most of their noise; the correlation of their
    // difference statistics against a common baseline should be recovered
    // from a single test set.
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let reps = 300;
    let (mut da, mut dc, mut est) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..reps {
        let (signal, labels) = binormal(&mut rng, 300, 1.0);
        let shared: Vec<f64> = signal.iter().map(|s| s + rng.sample::<f64, _>(StandardNormal)).collect();
        let base: Vec<f64> = signal.iter().map(|s| s + 1.5 * rng.sample::<f64, _>(StandardNormal)).collect();
        let a: Vec<f64> = shared.iter().map(|s| s + 0.3 * rng.sample::<f64, _>(StandardNormal)).collect();
        let c: Vec<f64> = shared.iter().map(|s| s + 0.3 * rng.sample::<f64, _>(StandardNormal)).collect();
        let ea = EvaluatedModel::evaluate(a, &labels).unwrap();
        let ec = EvaluatedModel::evaluate(c, &labels).unwrap();
        let eb = EvaluatedModel::evaluate(base, &labels).unwrap();
        da.push(ea.auc_hat - eb.auc_hat);
        dc.push(ec.auc_hat - eb.auc_hat);
        let r = statistic_correlation(&[&ea.influence, &ec.influence], &eb.influence).unwrap();
        est.push(r.block.get(0, 1));
    }
    let ma = da.iter().sum::<f64>() / reps as f64;
    let mc = dc.iter().sum::<f64>() / reps as f64;
    let cov: f64 = da.iter().zip(&dc).map(|(x, y)| (x - ma) * (y - mc)).sum::<f64>() / (reps as f64 - 1.0);
    let sampled = cov / (variance(&da) * variance(&dc)).sqrt();
    let estimated = est.iter().sum::<f64>() / reps as f64;
    assert!((sampled - estimated).abs() < 0.1, "{sampled} vs {estimated}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn composite_gate_is_the_largest_component(seed in any::<u64>(), delta in -0.05f64..0.05, eps in 0.01f64..0.2, c in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 120;
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        labels[0] = true;
        labels[1] = false;
        let cand: Vec<f64> = labels.iter().map(|&y| if y { rng.gen_range(0.2..1.0) } else { rng.gen_range(0.0..0.6) }).collect();
        let base: Vec<f64> = labels.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
        let a = EvaluatedModel::evaluate(cand, &labels).unwrap();
        let b = EvaluatedModel::evaluate(base, &labels).unwrap();
        let t = composite_test(&a, &b, &labels, delta, eps).unwrap();
        let parts = [t.calibration.p_lower, t.calibration.p_upper, t.auc.p_value];
        prop_assert!(parts.iter().all(|&p| p <= t.effective_p));
        prop_assert!(parts.contains(&t.effective_p));
        prop_assert_eq!(t.rejects(c), t.effective_p <= c);
    }

    #[test]
    fn auc_is_invariant_to_monotone_transforms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (scores, labels) = binormal(&mut rng, 80, 0.7);
        let squashed: Vec<f64> = scores.iter().map(|s| 1.0 / (1.0 + (-s).exp())).collect();
        prop_assert_eq!(empirical_auc(&scores, &labels).unwrap(), empirical_auc(&squashed, &labels).unwrap());
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        let sum = empirical_auc(&scores, &labels).unwrap() + empirical_auc(&flipped, &labels).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }
}
