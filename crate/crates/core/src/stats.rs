//! Numerically stable probability primitives shared by both models.
//!
//! Everything here works in log space; densities are only ever exponentiated
//! after normalization.

use crate::error::{Error, Result};

/// Natural-log probability density or mass. Finite for in-support inputs,
/// exactly `-inf` for out-of-support ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensity(f64);

impl LogDensity {
    pub(crate) fn new(value: f64) -> Self {
        LogDensity(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<LogDensity> for f64 {
    fn from(ld: LogDensity) -> f64 {
        ld.0
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Lanczos approximation (g = 7, 9 terms), relative error below 1e-13 on the
/// positive real axis.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
///
/// Returns NaN for nonpositive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x < 0.5 {
        // Reflection: ln Γ(x) = ln(π / sin(πx)) − ln Γ(1 − x)
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Log pmf of a Poisson distribution: `count·ln(rate) − rate − ln(count!)`.
///
/// The factorial goes through [`ln_gamma`], never a literal product.
pub fn log_poisson_pmf(rate: f64, count: u64) -> Result<LogDensity> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::domain(format!(
            "Poisson rate must be positive and finite, got {rate}"
        )));
    }
    let c = count as f64;
    Ok(LogDensity::new(c * rate.ln() - rate - ln_gamma(c + 1.0)))
}

/// `ln Σ exp(terms_i)`, computed by subtracting the maximum.
///
/// Returns exactly `-inf` when every term is `-inf`. Panics on an empty
/// slice — that is a usage error, not a data condition.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    assert!(!terms.is_empty(), "log_sum_exp of an empty slice");
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Softmax of a logit vector. Components are positive and sum to one;
/// the result is invariant under adding a constant to every logit.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::domain("softmax of an empty logit vector"));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::domain("softmax requires finite logits"));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Log density of a normal distribution with the given mean and standard
/// deviation.
pub fn log_normal_density(x: f64, mean: f64, sd: f64) -> Result<LogDensity> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::domain(format!(
            "normal sd must be positive and finite, got {sd}"
        )));
    }
    let z = (x - mean) / sd;
    Ok(LogDensity::new(-sd.ln() - LN_SQRT_2PI - 0.5 * z * z))
}

/// Standard logistic function `1/(1+e^{-z})`, stable for any finite `z`.
pub fn logistic_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `ln σ(z) = −softplus(−z)`.
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    // Reference values computed with mpmath at 30 digits.
    #[test]
    fn ln_gamma_matches_reference() {
        let cases = [
            (0.5, 0.572364942924700087071713675677),
            (4.2, 2.0485556369605898090213685832),
            (10.0, 12.8018274800814696112077178746),
            (100.5, 361.435540467777621555251912703),
            (1234.567, 7551.02780998427603980854935069),
            (1e6, 12815504.569147611659976971785),
        ];
        for (x, expected) in cases {
            assert_relative_eq!(ln_gamma(x), expected, max_relative = 1e-12);
        }
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(2.0), 0.0, epsilon = 1e-13);
        assert!(ln_gamma(0.0).is_nan());
        assert!(ln_gamma(-3.0).is_nan());
    }

    #[test]
    fn poisson_pmf_known_values() {
        // e^{-1} at zero count
        assert_abs_diff_eq!(
            log_poisson_pmf(1.0, 0).unwrap().value(),
            -1.0,
            epsilon = 1e-15
        );
        // direct evaluation of λ^c e^{-λ}/c! with exact small factorials
        assert_relative_eq!(
            log_poisson_pmf(2.0, 2).unwrap().value(),
            -1.3068528194400547,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            log_poisson_pmf(0.5, 3).unwrap().value(),
            -4.371201010907891,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            log_poisson_pmf(7.3, 11).unwrap().value(),
            -2.9356900161760859,
            max_relative = 1e-13
        );
    }

    #[test]
    fn poisson_pmf_rejects_bad_rate() {
        assert!(log_poisson_pmf(0.0, 1).is_err());
        assert!(log_poisson_pmf(-2.0, 1).is_err());
        assert!(log_poisson_pmf(f64::NAN, 1).is_err());
        assert!(log_poisson_pmf(f64::INFINITY, 1).is_err());
    }

    #[test]
    fn poisson_pmf_normalizes() {
        for &rate in &[0.5, 1.0, 3.3, 10.0, 25.0] {
            let k_max = (rate + 30.0 * rate.sqrt() + 40.0) as u64;
            let total: f64 = (0..=k_max)
                .map(|c| log_poisson_pmf(rate, c).unwrap().value().exp())
                .sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_sum_exp_basics() {
        assert_abs_diff_eq!(log_sum_exp(&[0.0, 0.0]), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]), 0.0, epsilon = 0.0);
        // naive evaluation overflows here
        assert_abs_diff_eq!(
            log_sum_exp(&[1000.0, 1000.0]),
            1000.0 + 2f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
    }

    #[test]
    #[should_panic(expected = "empty slice")]
    fn log_sum_exp_empty_is_usage_error() {
        log_sum_exp(&[]);
    }

    #[test]
    fn softmax_known_values() {
        let thirds = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for p in &thirds {
            assert_abs_diff_eq!(*p, 1.0 / 3.0, epsilon = 1e-15);
        }
        let p = softmax(&[2f64.ln(), 0.0]).unwrap();
        assert_abs_diff_eq!(p[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 1.0 / 3.0, epsilon = 1e-15);
        assert!(softmax(&[f64::NAN, 0.0]).is_err());
        assert!(softmax(&[f64::INFINITY, 0.0]).is_err());
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn normal_density_known_values() {
        assert_abs_diff_eq!(
            log_normal_density(0.0, 0.0, 1.0).unwrap().value(),
            -0.9189385332046727,
            epsilon = 1e-15
        );
        // peak value is −ln(σ√2π)
        for &sd in &[0.25, 1.0, 3.0] {
            assert_abs_diff_eq!(
                log_normal_density(1.7, 1.7, sd).unwrap().value(),
                -(sd * (2.0 * std::f64::consts::PI).sqrt()).ln(),
                epsilon = 1e-14
            );
        }
        assert_abs_diff_eq!(
            log_normal_density(1.0, 0.0, 2.0).unwrap().value(),
            -1.7370857137646181,
            epsilon = 1e-14
        );
        // one sd away from the mean costs exactly 1/2
        let peak = log_normal_density(3.0, 3.0, 0.7).unwrap().value();
        let off = log_normal_density(3.7, 3.0, 0.7).unwrap().value();
        assert_abs_diff_eq!(peak - off, 0.5, epsilon = 1e-14);
        assert!(log_normal_density(0.0, 0.0, 0.0).is_err());
        assert!(log_normal_density(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn sigmoid_known_values() {
        assert_eq!(logistic_sigmoid(0.0), 0.5);
        assert_abs_diff_eq!(logistic_sigmoid(9f64.ln()), 0.9, epsilon = 1e-15);
        assert_eq!(logistic_sigmoid(800.0), 1.0);
        assert_eq!(logistic_sigmoid(-800.0), 0.0);
        assert!(logistic_sigmoid(f64::INFINITY) == 1.0);
        assert!(logistic_sigmoid(f64::NEG_INFINITY) == 0.0);
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert_abs_diff_eq!(log_sigmoid(0.0), -(2f64.ln()), epsilon = 1e-15);
        // no -inf until genuine underflow
        assert_abs_diff_eq!(log_sigmoid(-700.0), -700.0, epsilon = 1e-10);
        assert!(log_sigmoid(700.0).abs() < 1e-300);
    }

    proptest! {
        #[test]
        fn log_sum_exp_matches_naive(terms in prop::collection::vec(-30.0f64..30.0, 1..8)) {
            let naive: f64 = terms.iter().map(|t| t.exp()).sum::<f64>().ln();
            let stable = log_sum_exp(&terms);
            prop_assert!((stable - naive).abs() <= 1e-13 * naive.abs().max(1.0));
        }

        #[test]
        fn softmax_shift_invariant(
            logits in prop::collection::vec(-20.0f64..20.0, 1..6),
            c in -50.0f64..50.0,
        ) {
            let base = softmax(&logits).unwrap();
            let shifted_logits: Vec<f64> = logits.iter().map(|l| l + c).collect();
            let shifted = softmax(&shifted_logits).unwrap();
            for (a, b) in base.iter().zip(&shifted) {
                prop_assert!((a - b).abs() < 1e-14);
            }
            let sum: f64 = base.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(base.iter().all(|p| *p > 0.0));
        }

        #[test]
        fn sigmoid_symmetry(z in -700.0f64..700.0) {
            prop_assert!((logistic_sigmoid(z) + logistic_sigmoid(-z) - 1.0).abs() < 1e-15);
        }
    }
}
