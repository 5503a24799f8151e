//! Quadratic AUC and DeLong placement-value variances.

/// Fraction of (positive, negative) pairs where the positive scores strictly higher.
pub fn pair_count_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0u64;
    let mut pairs = 0u64;
    for (i, &yi) in labels.iter().enumerate() {
        if !yi {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                wins += 1;
            }
        }
    }
    wins as f64 / pairs as f64
}

/// Placement values: for each positive the share of negatives it beats, and
/// for each negative the share of positives that beat it.
fn placements(scores: &[f64], labels: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let pos: Vec<f64> = labels.iter().zip(scores).filter(|(y, _)| **y).map(|(_, s)| *s).collect();
    let neg: Vec<f64> = labels.iter().zip(scores).filter(|(y, _)| !**y).map(|(_, s)| *s).collect();
    let v10 = pos
        .iter()
        .map(|&x| neg.iter().filter(|&&y| x > y).count() as f64 / neg.len() as f64)
        .collect();
    let v01 = neg
        .iter()
        .map(|&y| pos.iter().filter(|&&x| x > y).count() as f64 / pos.len() as f64)
        .collect();
    (v10, v01)
}

fn unbiased_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// DeLong variance of the empirical AUC.
pub fn delong_variance(scores: &[f64], labels: &[bool]) -> f64 {
    let (v10, v01) = placements(scores, labels);
    unbiased_variance(&v10) / v10.len() as f64 + unbiased_variance(&v01) / v01.len() as f64
}

/// DeLong variance of `AUC(a) - AUC(b)` on the same observations.
pub fn delong_difference_variance(a: &[f64], b: &[f64], labels: &[bool]) -> f64 {
    let (a10, a01) = placements(a, labels);
    let (b10, b01) = placements(b, labels);
    let d10: Vec<f64> = a10.iter().zip(&b10).map(|(x, y)| x - y).collect();
    let d01: Vec<f64> = a01.iter().zip(&b01).map(|(x, y)| x - y).collect();
    unbiased_variance(&d10) / d10.len() as f64 + unbiased_variance(&d01) / d01.len() as f64
}
