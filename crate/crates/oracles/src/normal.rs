//! Normal probabilities by adaptive Gauss-Kronrod quadrature.
//!
//! Dimension two integrates the conditional normal CDF over the first
//! coordinate; dimension three nests that inside another adaptive integral.
//! One-factor correlation structures reduce to a single integral in any
//! dimension.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Integration range standing in for the real line; the normal density
/// beyond it is below 1e-19.
const CUTOFF: f64 = 9.0;
const MAX_DEPTH: usize = 40;

fn standard() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

pub fn phi(x: f64) -> f64 {
    standard().pdf(x)
}

pub fn cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        standard().cdf(x)
    }
}

pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        standard().inverse_cdf(p)
    }
}

/// Quadrant probability `P(X <= 0, Y <= 0)` for correlation `rho`.
pub fn arcsine_quadrant(rho: f64) -> f64 {
    0.25 + rho.asin() / (2.0 * std::f64::consts::PI)
}

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the odd-indexed Kronrod nodes (7-point rule).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let centre = f(mid);
    let mut k = KRONROD_WEIGHTS[7] * centre;
    let mut g = GAUSS_WEIGHTS[3] * centre;
    for i in 0..7 {
        let x = half * KRONROD_NODES[i];
        let s = f(mid - x) + f(mid + x);
        k += KRONROD_WEIGHTS[i] * s;
        if i % 2 == 1 {
            g += GAUSS_WEIGHTS[i / 2] * s;
        }
    }
    (k * half, ((k - g) * half).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (value, err) = kronrod(f, a, b);
    if err <= tol || depth >= MAX_DEPTH {
        return value;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, 0.5 * tol, depth + 1) + adapt(f, mid, b, 0.5 * tol, depth + 1)
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    adapt(f, a, b, tol, 0)
}

/// `P(X <= h, Y <= k)` for a standard bivariate normal with correlation `rho`.
pub fn bivariate_cdf(h: f64, k: f64, rho: f64) -> f64 {
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return 0.0;
    }
    if h == f64::INFINITY {
        return cdf(k);
    }
    if k == f64::INFINITY {
        return cdf(h);
    }
    if rho >= 1.0 - 1e-12 {
        return cdf(h.min(k));
    }
    if rho <= -1.0 + 1e-12 {
        return (cdf(h) - cdf(-k)).max(0.0);
    }
    let s = (1.0 - rho * rho).sqrt();
    let f = |x: f64| phi(x) * cdf((k - rho * x) / s);
    let top = h.min(CUTOFF);
    if top <= -CUTOFF {
        return 0.0;
    }
    // Split where the conditional CDF switches so sharp steps are resolved.
    let pivot = if rho.abs() > 1e-9 { k / rho } else { f64::NAN };
    if pivot > -CUTOFF && pivot < top {
        integrate(&f, -CUTOFF, pivot, 1e-14) + integrate(&f, pivot, top, 1e-14)
    } else {
        integrate(&f, -CUTOFF, top, 1e-14)
    }
}

/// `P(X_i <= u_i for all i)` for a trivariate standard normal with
/// correlation matrix `r`. Infinite bounds are allowed.
pub fn trivariate_cdf(u: [f64; 3], r: [[f64; 3]; 3]) -> f64 {
    if u.iter().any(|&x| x == f64::NEG_INFINITY) {
        return 0.0;
    }
    let finite: Vec<usize> = (0..3).filter(|&i| u[i] < f64::INFINITY).collect();
    match finite.len() {
        0 => return 1.0,
        1 => return cdf(u[finite[0]]),
        2 => return bivariate_cdf(u[finite[0]], u[finite[1]], r[finite[0]][finite[1]]),
        _ => {}
    }
    let (r12, r13, r23) = (r[0][1], r[0][2], r[1][2]);
    let s2 = (1.0 - r12 * r12).sqrt();
    let s3 = (1.0 - r13 * r13).sqrt();
    assert!(s2 > 1e-6 && s3 > 1e-6, "first variable must not be perfectly correlated");
    let rc = ((r23 - r12 * r13) / (s2 * s3)).clamp(-1.0, 1.0);
    let f = |x: f64| phi(x) * bivariate_cdf((u[1] - r12 * x) / s2, (u[2] - r13 * x) / s3, rc);
    let top = u[0].min(CUTOFF);
    integrate(&f, -CUTOFF, top, 1e-12)
}

/// `P(lower_i < X_i <= upper_i)` in dimension one to three by
/// inclusion-exclusion over the lower corners.
pub fn rectangle(lower: &[f64], upper: &[f64], r: &[Vec<f64>]) -> f64 {
    let d = lower.len();
    assert!(d >= 1 && d <= 3 && upper.len() == d && r.len() == d);
    let mut total = 0.0;
    for mask in 0u32..(1 << d) {
        let mut corner = [f64::INFINITY; 3];
        let mut sign = 1.0;
        let mut skip = false;
        for i in 0..d {
            if mask & (1 << i) != 0 {
                if lower[i] == f64::NEG_INFINITY {
                    skip = true;
                    break;
                }
                corner[i] = lower[i];
                sign = -sign;
            } else {
                corner[i] = upper[i];
            }
        }
        if skip {
            continue;
        }
        let value = match d {
            1 => cdf(corner[0]),
            2 => bivariate_cdf(corner[0], corner[1], r[0][1]),
            _ => {
                let mut m = [[1.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] = r[i][j];
                    }
                }
                trivariate_cdf(corner, m)
            }
        };
        total += sign * value;
    }
    total
}

/// `P(lower_i < X_i <= upper_i)` when `X_i = l_i W + sqrt(1 - l_i^2) E_i`
/// with independent standard normals, i.e. correlation `l_i l_j`.
pub fn factor_rectangle(loadings: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    let scales: Vec<f64> = loadings.iter().map(|l| (1.0 - l * l).sqrt()).collect();
    let f = |w: f64| {
        let mut p = phi(w);
        for i in 0..loadings.len() {
            let hi = cdf((upper[i] - loadings[i] * w) / scales[i]);
            let lo = cdf((lower[i] - loadings[i] * w) / scales[i]);
            p *= hi - lo;
        }
        p
    };
    integrate(&f, -CUTOFF, CUTOFF, 1e-13)
}

/// Root of an increasing function by plain bisection.
pub fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * hi.abs().max(1e-6) {
            break;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bivariate_matches_arcsine() {
        for &rho in &[-0.9, -0.3, 0.0, 0.5, 0.95] {
            let q = bivariate_cdf(0.0, 0.0, rho);
            assert!((q - arcsine_quadrant(rho)).abs() < 1e-10, "{rho}: {q}");
        }
    }

    #[test]
    fn trivariate_independent_and_exchangeable() {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let p = trivariate_cdf([0.3, -0.5, 1.1], id);
        assert!((p - cdf(0.3) * cdf(-0.5) * cdf(1.1)).abs() < 1e-10);
        // Orthant of an exchangeable triple: 1/8 + 3 asin(rho) / (4 pi).
        let rho: f64 = 0.4;
        let m = [[1.0, rho, rho], [rho, 1.0, rho], [rho, rho, 1.0]];
        let expect = 0.125 + 3.0 * rho.asin() / (4.0 * std::f64::consts::PI);
        assert!((trivariate_cdf([0.0; 3], m) - expect).abs() < 1e-9);
    }

    #[test]
    fn factor_agrees_with_nested_quadrature() {
        let l = [0.3, 0.7, 0.5];
        let r: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { l[i] * l[j] }).collect())
            .collect();
        let lower = [f64::NEG_INFINITY, -0.4, 0.2];
        let upper = [0.5, f64::INFINITY, 1.5];
        let a = rectangle(&lower, &upper, &r);
        let b = factor_rectangle(&l, &lower, &upper);
        assert!((a - b).abs() < 1e-9, "{a} {b}");
    }

    #[test]
    fn bisection_inverts_cdf() {
        let x = bisect_increasing(cdf, 0.025, -10.0, 10.0);
        assert!((x - quantile(0.025)).abs() < 1e-10);
    }
}
