//! Fuzzy aggregation operators shared by the complexity classifier and the
//! relevance model.

use crate::error::{Error, Result};

/// Binary Hamacher product `xy / (a + (1 - a)(x + y - xy))`.
///
/// At `a = 1` this is the algebraic product; at `a = 0` it is the Hamacher
/// t-norm proper. The `0/0` case (`a = 0`, both operands zero) yields 0.
pub fn hamacher(x: f64, y: f64, a: f64) -> f64 {
    let num = x * y;
    let den = a + (1.0 - a) * (x + y - num);
    if den == 0.0 {
        return 0.0;
    }
    (num / den).clamp(0.0, 1.0)
}

/// Left fold of [`hamacher`] over `values`; a singleton returns its element.
pub fn hamacher_fold(values: &[f64], a: f64) -> Result<f64> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::invalid(format!(
            "Hamacher parameter must be finite and >= 0, got {a}"
        )));
    }
    let (first, rest) = values
        .split_first()
        .ok_or_else(|| Error::invalid("Hamacher fold over an empty list"))?;
    check_unit(*first)?;
    rest.iter().try_fold(*first, |acc, &v| {
        check_unit(v)?;
        Ok(hamacher(acc, v, a))
    })
}

fn check_unit(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("membership degree {v} outside [0, 1]")))
    }
}

/// Power mean `((1/m) Σ v^α)^(1/α)`.
///
/// `α = 1` is the arithmetic mean, `α = 2` the quadratic mean. Values must be
/// non-negative.
pub fn quasi_arithmetic_mean(values: &[f64], alpha: f64) -> Result<f64> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::invalid(format!(
            "quasi-arithmetic exponent must be finite and non-zero, got {alpha}"
        )));
    }
    if values.is_empty() {
        return Err(Error::invalid("quasi-arithmetic mean of an empty list"));
    }
    if let Some(bad) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!(
            "quasi-arithmetic mean needs finite non-negative values, got {bad}"
        )));
    }
    Ok(power_mean_unchecked(values, alpha))
}

pub(crate) fn power_mean_unchecked(values: &[f64], alpha: f64) -> f64 {
    let m = values.len() as f64;
    if alpha == 1.0 {
        return values.iter().sum::<f64>() / m;
    }
    let s: f64 = values.iter().map(|v| v.powf(alpha)).sum::<f64>() / m;
    s.powf(1.0 / alpha)
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamacher_singleton_is_identity() {
        assert_eq!(hamacher_fold(&[0.37], 3.0).unwrap(), 0.37);
    }

    #[test]
    fn hamacher_at_one_is_product() {
        assert_close!(hamacher_fold(&[0.5, 0.5], 1.0).unwrap(), 0.25, 1e-15);
    }

    #[test]
    fn hamacher_at_two() {
        // 0.25 / (2 - 0.75)
        assert_close!(hamacher(0.5, 0.5, 2.0), 0.2, 1e-15);
    }

    #[test]
    fn hamacher_degenerate_zero_over_zero() {
        assert_eq!(hamacher(0.0, 0.0, 0.0), 0.0);
        assert_eq!(hamacher_fold(&[0.0, 0.0, 0.4], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn hamacher_rejects_negative_parameter() {
        assert!(hamacher_fold(&[0.5], -0.1).is_err());
        assert!(hamacher_fold(&[], 1.0).is_err());
        assert!(hamacher_fold(&[1.2], 1.0).is_err());
    }

    #[test]
    fn qam_cases() {
        assert_close!(quasi_arithmetic_mean(&[0.2, 0.4], 1.0).unwrap(), 0.3, 1e-15);
        assert_close!(
            quasi_arithmetic_mean(&[0.3, 0.4], 2.0).unwrap(),
            0.125f64.sqrt(),
            1e-15
        );
        for alpha in [-2.0, 0.5, 1.0, 3.0, 7.5] {
            assert_close!(quasi_arithmetic_mean(&[0.6; 3], alpha).unwrap(), 0.6, 1e-12);
        }
    }

    #[test]
    fn qam_rejects_zero_exponent() {
        assert!(quasi_arithmetic_mean(&[0.1], 0.0).is_err());
        assert!(quasi_arithmetic_mean(&[], 1.0).is_err());
        assert!(quasi_arithmetic_mean(&[-0.1], 1.0).is_err());
    }

    #[test]
    fn sigmoid_midpoint() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_close!(sigmoid(1.0), 0.731_058_578_630_004_9, 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn hamacher_stays_in_unit_interval(
            vals in proptest::collection::vec(0.0f64..=1.0, 1..8),
            a in 0.0f64..20.0,
        ) {
            let out = hamacher_fold(&vals, a).unwrap();
            proptest::prop_assert!((0.0..=1.0).contains(&out));
        }

        #[test]
        fn hamacher_one_matches_product(vals in proptest::collection::vec(0.0f64..=1.0, 1..8)) {
            let out = hamacher_fold(&vals, 1.0).unwrap();
            let prod: f64 = vals.iter().product();
            proptest::prop_assert!((out - prod).abs() <= 1e-12);
        }

        #[test]
        fn qam_monotone_for_positive_alpha(
            vals in proptest::collection::vec(0.0f64..=1.0, 1..8),
            idx in 0usize..8,
            bump in 0.0f64..0.5,
            alpha in 0.1f64..6.0,
        ) {
            let i = idx % vals.len();
            let mut raised = vals.clone();
            raised[i] += bump;
            let lo = quasi_arithmetic_mean(&vals, alpha).unwrap();
            let hi = quasi_arithmetic_mean(&raised, alpha).unwrap();
            proptest::prop_assert!(hi + 1e-12 >= lo);
        }
    }
}
