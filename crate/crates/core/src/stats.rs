//! Empirical Bernstein bounds and the independence tests built on them.
//!
//! Three tests are provided:
//!
//! - [`basic_interval_test`]: builds one confidence interval around the
//!   empirical error rate and one around the importance weighted adversarial
//!   estimate and rejects independence when they are disjoint.
//! - [`pairwise_test`]: applies the bound to the per-example differences
//!   `T_i`, which exploits the strong correlation of the two estimates.
//! - [`n_model_test`]: the pairwise test on per-example differences averaged
//!   over `N` independently trained models.
//!
//! All variances use population (`1/m`) normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when checking that observed values lie in their declared range.
const RANGE_SLACK: f64 = 1e-12;

/// Parameters of the empirical Bernstein radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernsteinParams {
    /// Sample count.
    pub m: usize,
    /// Empirical (population) variance.
    pub sigma2: f64,
    /// Confidence parameter in `(0, 1]`.
    pub delta: f64,
    /// Range of the averaged random variables.
    pub range_u: f64,
}

impl BernsteinParams {
    pub fn new(m: usize, sigma2: f64, delta: f64, range_u: f64) -> Result<Self> {
        let p = BernsteinParams {
            m,
            sigma2,
            delta,
            range_u,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::invalid("m", "sample count must be at least 1"));
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return Err(Error::invalid(
                "sigma2",
                format!("variance must be finite and non-negative, got {}", self.sigma2),
            ));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid(
                "delta",
                format!("must lie in (0, 1], got {}", self.delta),
            ));
        }
        if !(self.range_u > 0.0) || !self.range_u.is_finite() {
            return Err(Error::invalid(
                "range_u",
                format!("must be finite and positive, got {}", self.range_u),
            ));
        }
        Ok(())
    }
}

/// Empirical Bernstein radius
/// `sqrt(2 σ² ln(3/δ) / m) + 3 U ln(3/δ) / m`.
pub fn bernstein_radius(p: &BernsteinParams) -> Result<f64> {
    p.validate()?;
    let m = p.m as f64;
    let log_term = (3.0 / p.delta).ln();
    Ok((2.0 * p.sigma2 * log_term / m).sqrt() + 3.0 * p.range_u * log_term / m)
}

/// Outcome of an independence test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    /// Absolute value of the mean difference of the two risk estimates.
    pub statistic: f64,
    /// Rejection threshold at the requested confidence.
    pub threshold: f64,
    pub p_value: f64,
    pub reject: bool,
    pub m: usize,
    /// Empirical variance of the per-example differences.
    pub sigma_t2: f64,
}

/// One test point: its zero-one loss, its importance weighted adversarial
/// loss and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedObservation {
    pub original_loss: f64,
    /// Zero-one loss of the perturbed point before weighting.
    pub adversarial_loss: f64,
    /// Density weight, present only when the perturbed point is misclassified.
    pub weight: Option<f64>,
    pub weighted_adv_loss: f64,
    pub t_value: f64,
}

impl PairedObservation {
    pub fn new(original_loss: f64, adversarial_loss: f64, weight: Option<f64>) -> Self {
        let weighted_adv_loss = match weight {
            Some(h) if adversarial_loss != 0.0 => adversarial_loss * h,
            _ => 0.0,
        };
        PairedObservation {
            original_loss,
            adversarial_loss,
            weight,
            weighted_adv_loss,
            t_value: weighted_adv_loss - original_loss,
        }
    }

    /// An observation carrying only a precomputed difference.
    pub fn from_t_value(t_value: f64) -> Self {
        PairedObservation {
            original_loss: 0.0,
            adversarial_loss: 0.0,
            weight: None,
            weighted_adv_loss: t_value,
            t_value,
        }
    }
}

/// Mean and population variance of a sample.
pub fn mean_and_variance(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
    Ok((mean, var))
}

/// `(t_mean, sigma_t2)` of the paired differences.
pub fn paired_statistics(obs: &[PairedObservation]) -> Result<(f64, f64)> {
    let t: Vec<f64> = obs.iter().map(|o| o.t_value).collect();
    mean_and_variance(&t)
}

/// Exponent `E` of the pairwise p-value `min(1, 3 exp(-E))`.
///
/// The textbook form `m/(9U²) (σ² + 3U|T| - σ sqrt(σ² + 6U|T|))` cancels
/// badly when `6U|T| << σ²`; multiplying through by the conjugate gives the
/// equivalent `m |T|² / (σ² + 3U|T| + σ sqrt(σ² + 6U|T|))`.
fn p_value_exponent(abs_t: f64, sigma_t: f64, m: f64, range_u: f64) -> f64 {
    if abs_t == 0.0 {
        return 0.0;
    }
    let s2 = sigma_t * sigma_t;
    let denom = s2 + 3.0 * range_u * abs_t + sigma_t * (s2 + 6.0 * range_u * abs_t).sqrt();
    m * abs_t * abs_t / denom
}

fn check_p_value_args(abs_t: f64, sigma_t: f64, m: usize, range_u: f64) -> Result<()> {
    if !(abs_t >= 0.0) || !abs_t.is_finite() {
        return Err(Error::invalid("abs_t", format!("must be finite and >= 0, got {abs_t}")));
    }
    if !(sigma_t >= 0.0) || !sigma_t.is_finite() {
        return Err(Error::invalid(
            "sigma_t",
            format!("must be finite and >= 0, got {sigma_t}"),
        ));
    }
    if m < 1 {
        return Err(Error::invalid("m", "sample count must be at least 1"));
    }
    if !(range_u > 0.0) || !range_u.is_finite() {
        return Err(Error::invalid(
            "range_u",
            format!("must be finite and positive, got {range_u}"),
        ));
    }
    Ok(())
}

/// Natural log of the pairwise p-value; stays exact where the p-value itself
/// underflows.
pub fn pairwise_log_p_value(abs_t: f64, sigma_t: f64, m: usize, range_u: f64) -> Result<f64> {
    check_p_value_args(abs_t, sigma_t, m, range_u)?;
    let e = p_value_exponent(abs_t, sigma_t, m as f64, range_u);
    Ok((3f64.ln() - e).min(0.0))
}

/// Smallest confidence parameter at which the pairwise test rejects:
/// the closed-form inverse of [`bernstein_radius`] at the observed statistic,
/// capped at 1.
///
/// Values below the smallest positive normal `f64` are clamped to it.
pub fn pairwise_p_value(abs_t: f64, sigma_t: f64, m: usize, range_u: f64) -> Result<f64> {
    let log_p = pairwise_log_p_value(abs_t, sigma_t, m, range_u)?;
    Ok(log_p.exp().max(f64::MIN_POSITIVE))
}

fn verdict_from_values(t: &[f64], range_u: f64, delta: f64) -> Result<TestVerdict> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let (lo, hi) = (-1.0, range_u - 1.0);
    for (index, &value) in t.iter().enumerate() {
        if !(value >= lo - RANGE_SLACK && value <= hi + RANGE_SLACK) {
            return Err(Error::RangeViolation { index, value, lo, hi });
        }
    }
    let (mean, var) = mean_and_variance(t)?;
    let m = t.len();
    let threshold = bernstein_radius(&BernsteinParams::new(m, var, delta, range_u)?)?;
    let statistic = mean.abs();
    let p_value = pairwise_p_value(statistic, var.sqrt(), m, range_u)?;
    Ok(TestVerdict {
        statistic,
        threshold,
        p_value,
        reject: statistic > threshold,
        m,
        sigma_t2: var,
    })
}

/// Pairwise independence test on the differences `T_i`.
///
/// `range_u` is the range of the `T_i`; the values must lie in
/// `[-1, range_u - 1]` (`[-1, 1]` for `U = 2`, `[-1, 1/2]` for `U = 3/2`).
pub fn pairwise_test(obs: &[PairedObservation], range_u: f64, delta: f64) -> Result<TestVerdict> {
    let t: Vec<f64> = obs.iter().map(|o| o.t_value).collect();
    pairwise_test_values(&t, range_u, delta)
}

/// [`pairwise_test`] on raw `T_i` values.
pub fn pairwise_test_values(t_values: &[f64], range_u: f64, delta: f64) -> Result<TestVerdict> {
    if t_values.is_empty() {
        return Err(Error::EmptySample);
    }
    verdict_from_values(t_values, range_u, delta)
}

/// How [`basic_interval_test_with`] reports its p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasicPValue {
    /// `2δ` on rejection, `1` otherwise.
    #[default]
    Label,
    /// The smallest `2δ` at which the two intervals are disjoint.
    Continuous,
}

/// Confidence-interval test: rejects when the intervals around the empirical
/// error rate and the weighted adversarial estimate are disjoint, which
/// corresponds to confidence `1 - 2δ`.
pub fn basic_interval_test(
    original_losses: &[f64],
    weighted_adv_losses: &[f64],
    delta: f64,
) -> Result<TestVerdict> {
    basic_interval_test_with(original_losses, weighted_adv_losses, delta, BasicPValue::Label)
}

pub fn basic_interval_test_with(
    original_losses: &[f64],
    weighted_adv_losses: &[f64],
    delta: f64,
    mode: BasicPValue,
) -> Result<TestVerdict> {
    if original_losses.len() != weighted_adv_losses.len() {
        return Err(Error::LengthMismatch {
            left: original_losses.len(),
            right: weighted_adv_losses.len(),
        });
    }
    if original_losses.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::invalid("delta", format!("must lie in (0, 1/2), got {delta}")));
    }
    for (index, &value) in original_losses.iter().chain(weighted_adv_losses).enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::RangeViolation {
                index: index % original_losses.len(),
                value,
                lo: 0.0,
                hi: 1.0,
            });
        }
    }
    let m = original_losses.len();
    let (mean_s, var_s) = mean_and_variance(original_losses)?;
    let (mean_g, var_g) = mean_and_variance(weighted_adv_losses)?;
    let radius_s = bernstein_radius(&BernsteinParams::new(m, var_s, delta, 1.0)?)?;
    let radius_g = bernstein_radius(&BernsteinParams::new(m, var_g, delta, 1.0)?)?;
    let t: Vec<f64> = original_losses
        .iter()
        .zip(weighted_adv_losses)
        .map(|(s, g)| g - s)
        .collect();
    let (_, var_t) = mean_and_variance(&t)?;

    let statistic = (mean_g - mean_s).abs();
    let threshold = radius_s + radius_g;
    let reject = statistic > threshold;
    let p_value = match mode {
        BasicPValue::Label => {
            if reject {
                2.0 * delta
            } else {
                1.0
            }
        }
        BasicPValue::Continuous => basic_interval_p_value(statistic, var_s, var_g, m),
    };
    Ok(TestVerdict {
        statistic,
        threshold,
        p_value,
        reject,
        m,
        sigma_t2: var_t,
    })
}

/// `2δ` for the δ at which the two unit-range intervals exactly touch.
///
/// With `s = sqrt(ln(3/δ))` the touching condition `B_S + B_g = gap` is the
/// quadratic `(6/m) s² + (sqrt(2σ_S²/m) + sqrt(2σ_g²/m)) s - gap = 0`.
fn basic_interval_p_value(gap: f64, var_s: f64, var_g: f64, m: usize) -> f64 {
    if gap <= 0.0 {
        return 1.0;
    }
    let m = m as f64;
    let a = (2.0 * var_s / m).sqrt() + (2.0 * var_g / m).sqrt();
    let c = 6.0 / m;
    let s = 2.0 * gap / (a + (a * a + 4.0 * c * gap).sqrt());
    let log_delta = 3f64.ln() - s * s;
    (2.0 * log_delta.exp()).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Column means of an `N x m` matrix whose row `j` holds the differences of
/// model `j`.
pub fn n_model_average(t_matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = t_matrix.first().ok_or(Error::EmptySample)?;
    let m = first.len();
    if m == 0 {
        return Err(Error::EmptySample);
    }
    for (row, values) in t_matrix.iter().enumerate() {
        if values.len() != m {
            return Err(Error::RaggedMatrix {
                row,
                len: values.len(),
                expected: m,
            });
        }
    }
    let n = t_matrix.len() as f64;
    let mut sums = vec![0.0; m];
    for row in t_matrix {
        for (acc, v) in sums.iter_mut().zip(row) {
            *acc += v;
        }
    }
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// The pairwise test applied to the model-averaged differences.
pub fn n_model_test(t_matrix: &[Vec<f64>], range_u: f64, delta: f64) -> Result<TestVerdict> {
    let averaged = n_model_average(t_matrix)?;
    pairwise_test_values(&averaged, range_u, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn obs(t: &[f64]) -> Vec<PairedObservation> {
        t.iter().map(|&v| PairedObservation::from_t_value(v)).collect()
    }

    fn radius(m: usize, s2: f64, d: f64, u: f64) -> f64 {
        bernstein_radius(&BernsteinParams::new(m, s2, d, u).unwrap()).unwrap()
    }

    #[test]
    fn radius_examples() {
        let d = 3.0 / std::f64::consts::E.powi(2);
        assert_abs_diff_eq!(radius(6, 0.0, d, 1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(radius(6, 0.0, d, 2.0), 2.0, epsilon = 1e-15);
        // High-precision evaluation of the closed form.
        assert_abs_diff_eq!(
            radius(10_000, 0.25, 0.05, 1.0),
            0.015_536_246_201_621_514,
            epsilon = 1e-15
        );
    }

    #[test]
    fn radius_rejects_bad_params() {
        for (m, s2, d, u) in [
            (0, 0.1, 0.1, 1.0),
            (5, -0.1, 0.1, 1.0),
            (5, 0.1, 0.0, 1.0),
            (5, 0.1, 1.5, 1.0),
            (5, 0.1, 0.1, 0.0),
            (5, f64::NAN, 0.1, 1.0),
        ] {
            assert!(matches!(
                BernsteinParams::new(m, s2, d, u),
                Err(Error::InvalidParameter { .. })
            ));
        }
        assert!(BernsteinParams::new(1, 0.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn paired_statistics_examples() {
        assert_eq!(paired_statistics(&obs(&[0.0; 5])).unwrap(), (0.0, 0.0));
        assert_eq!(paired_statistics(&obs(&[1.0, -1.0])).unwrap(), (0.0, 1.0));
        let (mean, var) = paired_statistics(&obs(&[0.5, 0.0, -1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(mean, -0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(var, 0.296875, epsilon = 1e-15);
        assert!(matches!(paired_statistics(&[]), Err(Error::EmptySample)));
    }

    #[test]
    fn p_value_examples() {
        assert_eq!(pairwise_p_value(0.0, 0.3, 10, 2.0).unwrap(), 1.0);
        assert_eq!(pairwise_p_value(0.0, 0.0, 1, 0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(
            pairwise_p_value(0.09, 0.0, 300, 1.5).unwrap(),
            0.007_436_256_529_999_075,
            epsilon = 1e-15
        );
        let p = pairwise_p_value(0.05, 0.2, 1000, 2.0).unwrap();
        assert_abs_diff_eq!(p, 0.020_213_840_997_256_4, epsilon = 1e-15);
        assert_abs_diff_eq!(radius(1000, 0.04, p, 2.0), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn p_value_rejects_bad_args() {
        assert!(pairwise_p_value(-0.1, 0.0, 10, 1.0).is_err());
        assert!(pairwise_p_value(0.1, -0.1, 10, 1.0).is_err());
        assert!(pairwise_p_value(0.1, 0.0, 0, 1.0).is_err());
        assert!(pairwise_p_value(0.1, 0.0, 10, 0.0).is_err());
    }

    #[test]
    fn exponent_matches_textbook_form_where_it_is_stable() {
        for &(t, s, m, u) in &[(0.3f64, 0.2f64, 50.0, 2.0), (0.01, 0.5, 1e4, 1.5), (1.0, 1.0, 3.0, 2.0)] {
            let direct: f64 = m / (9.0 * u * u)
                * (s * s + 3.0 * u * t - s * (s * s + 6.0 * u * t).sqrt());
            assert_abs_diff_eq!(p_value_exponent(t, s, m, u), direct, epsilon = 1e-9 * direct.max(1.0));
        }
    }

    #[test]
    fn exponent_is_accurate_for_tiny_statistics() {
        // 6U|T| << σ²: leading-order expansion gives m T² / (2σ²).
        let (t, s, m, u) = (1e-12, 1.0, 1e6, 2.0);
        let e = p_value_exponent(t, s, m, u);
        assert_abs_diff_eq!(e / (m * t * t / (2.0 * s * s)), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn pairwise_test_examples() {
        let v = pairwise_test(&obs(&[0.0; 40]), 2.0, 0.05).unwrap();
        assert!(!v.reject);
        assert_eq!(v.p_value, 1.0);

        let v = pairwise_test(&obs(&[0.09; 300]), 1.5, 0.05).unwrap();
        assert!(v.reject);
        assert_abs_diff_eq!(v.p_value, 3.0 * (-6.0f64).exp(), epsilon = 1e-12);
        assert_eq!(v.m, 300);
        assert_abs_diff_eq!(v.sigma_t2, 0.0, epsilon = 1e-20);
    }

    #[test]
    fn pairwise_test_range_violation() {
        assert!(matches!(
            pairwise_test(&obs(&[0.0, 0.75]), 1.5, 0.05),
            Err(Error::RangeViolation { index: 1, .. })
        ));
        assert!(pairwise_test(&obs(&[0.0, 0.75]), 2.0, 0.05).is_ok());
        assert!(matches!(
            pairwise_test(&obs(&[-1.5]), 2.0, 0.05),
            Err(Error::RangeViolation { .. })
        ));
        assert!(matches!(pairwise_test(&[], 2.0, 0.05), Err(Error::EmptySample)));
    }

    #[test]
    fn degenerate_single_observation() {
        let v = pairwise_test(&obs(&[0.5]), 2.0, 0.05).unwrap();
        assert_eq!(v.sigma_t2, 0.0);
        assert_abs_diff_eq!(v.threshold, 3.0 * 2.0 * (60f64).ln(), epsilon = 1e-12);
        assert!(!v.reject);
    }

    #[test]
    fn basic_interval_examples() {
        let a = [0.0, 1.0, 0.0, 0.5, 1.0];
        let v = basic_interval_test(&a, &a, 0.025).unwrap();
        assert!(!v.reject);
        assert_eq!(v.p_value, 1.0);

        let v = basic_interval_test(&[0.0; 1000], &[1.0; 1000], 0.025).unwrap();
        assert!(v.reject);
        assert_abs_diff_eq!(v.p_value, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(
            v.threshold,
            2.0 * 0.014_362_475_228_346_138,
            epsilon = 1e-15
        );
    }

    #[test]
    fn basic_interval_errors() {
        assert!(matches!(
            basic_interval_test(&[0.0; 3], &[0.0; 2], 0.025),
            Err(Error::LengthMismatch { left: 3, right: 2 })
        ));
        assert!(matches!(basic_interval_test(&[], &[], 0.025), Err(Error::EmptySample)));
        assert!(basic_interval_test(&[0.0], &[0.0], 0.5).is_err());
        assert!(basic_interval_test(&[0.0], &[1.5], 0.1).is_err());
    }

    #[test]
    fn continuous_basic_p_value_touches_intervals() {
        let s: Vec<f64> = (0..4000).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect();
        let g: Vec<f64> = (0..4000).map(|i| if i % 3 == 0 { 0.5 } else { 0.0 }).collect();
        let v = basic_interval_test_with(&s, &g, 0.025, BasicPValue::Continuous).unwrap();
        assert!(v.p_value < 1.0);
        let delta = v.p_value / 2.0;
        let (_, vs) = mean_and_variance(&s).unwrap();
        let (_, vg) = mean_and_variance(&g).unwrap();
        let touch = radius(4000, vs, delta, 1.0) + radius(4000, vg, delta, 1.0);
        assert_abs_diff_eq!(touch, v.statistic, epsilon = 1e-12);
        // Consistency with the label mode at the same δ.
        let labelled = basic_interval_test(&s, &g, 0.025).unwrap();
        assert_eq!(labelled.reject, v.p_value <= 0.05);
    }

    #[test]
    fn n_model_examples() {
        assert_eq!(n_model_average(&[vec![0.1, -0.2, 0.3]]).unwrap(), vec![0.1, -0.2, 0.3]);
        assert_eq!(
            n_model_average(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            vec![0.5, 0.5]
        );
        assert!(matches!(
            n_model_average(&[vec![1.0, 0.0], vec![0.0]]),
            Err(Error::RaggedMatrix { row: 1, len: 1, expected: 2 })
        ));
        assert!(matches!(n_model_average(&[]), Err(Error::EmptySample)));
        let v = n_model_test(&[vec![0.0; 10], vec![0.0; 10]], 2.0, 0.05).unwrap();
        assert_eq!(v.p_value, 1.0);
    }

    #[test]
    fn n_model_average_matches_reverse_order_summation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..64).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let avg = n_model_average(&rows).unwrap();
        for i in 0..64 {
            let mut acc = 0.0;
            for row in rows.iter().rev() {
                acc += row[i];
            }
            assert_abs_diff_eq!(avg[i], acc / 10.0, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn p_value_inverts_radius(
            m in 1usize..100_000,
            sigma in 0.0f64..1.0,
            u in 0.1f64..2.0,
            frac in 0.0f64..1.0,
        ) {
            let t = frac * u;
            let p = pairwise_p_value(t, sigma, m, u).unwrap();
            prop_assert!(p > 0.0 && p <= 1.0);
            if p < 1.0 && p > 1e-300 {
                let r = radius(m, sigma * sigma, p, u);
                prop_assert!((r - t).abs() <= 1e-9, "radius {} vs t {}", r, t);
            }
        }

        #[test]
        fn p_value_monotone(
            m in 1usize..10_000,
            s in 0.0f64..1.0,
            u in 0.1f64..2.0,
            t1 in 0.0f64..1.0,
            t2 in 0.0f64..1.0,
            ds in 0.0f64..0.5,
        ) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(pairwise_p_value(hi, s, m, u).unwrap() <= pairwise_p_value(lo, s, m, u).unwrap());
            prop_assert!(pairwise_p_value(lo, s, m, u).unwrap() <= pairwise_p_value(lo, s + ds, m, u).unwrap());
        }

        #[test]
        fn verdict_consistency(t in proptest::collection::vec(-1.0f64..1.0, 1..200), delta in 0.001f64..0.5) {
            let v = pairwise_test(&obs(&t), 2.0, delta).unwrap();
            prop_assert_eq!(v.reject, v.statistic > v.threshold);
            // Ties between p and δ only occur on a measure-zero set.
            if (v.p_value - delta).abs() > 1e-12 {
                prop_assert_eq!(v.reject, v.p_value <= delta);
            }
            let single = n_model_test(std::slice::from_ref(&t), 2.0, delta).unwrap();
            prop_assert_eq!(single, v);
        }

        #[test]
        fn radius_monotone(m in 1usize..1000, s2 in 0.0f64..1.0, d in 0.01f64..1.0, u in 0.1f64..3.0) {
            let r = radius(m, s2, d, u);
            prop_assert!(radius(m + 1, s2, d, u) <= r);
            prop_assert!(radius(m, s2 + 0.1, d, u) >= r);
            prop_assert!(radius(m, s2, d * 0.9, u) >= r);
            prop_assert!(radius(m, s2, d, u + 0.1) >= r);
        }
    }
}
