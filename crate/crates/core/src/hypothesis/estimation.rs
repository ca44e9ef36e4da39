use crate::error::Result;
use crate::estimators::{collect_two_bit_all, estimate_mean, estimate_variance, BudgetSplit};
use crate::mechanism::{DomainBound, RandomSource};

use super::welch::{welch_from_moments, WelchMoments};
use super::{same_bound, Hypothesis, Method, NullDistribution, RawSample, TestResult};

/// Floor applied to non-positive variance estimates: `m^2 * 1e-12`.
pub fn default_variance_floor(bound: DomainBound) -> f64 {
    bound.get() * bound.get() * 1e-12
}

/// Estimation-based test with the default variance floor.
pub fn est_test<R: RandomSource + ?Sized>(
    a: &RawSample,
    b: &RawSample,
    split: BudgetSplit,
    h: &Hypothesis,
    rng: &mut R,
) -> Result<TestResult> {
    let floor = default_variance_floor(same_bound(a, b)?);
    est_test_with_floor(a, b, split, h, floor, rng)
}

/// Estimation-based test: each user sends two bits (`x` under `eps1`, `x^2`
/// under `eps2`), the server estimates both groups' means and variances and
/// plugs them into Welch's statistic and degrees of freedom.
///
/// Variance estimates `<= 0` are replaced by `variance_floor` before the
/// statistic is formed.
pub fn est_test_with_floor<R: RandomSource + ?Sized>(
    a: &RawSample,
    b: &RawSample,
    split: BudgetSplit,
    h: &Hypothesis,
    variance_floor: f64,
    rng: &mut R,
) -> Result<TestResult> {
    let bound = same_bound(a, b)?;
    let (a1, a2) = collect_two_bit_all(a.values(), bound, split, rng)?;
    let (b1, b2) = collect_two_bit_all(b.values(), bound, split, rng)?;

    let floored = |v: f64| if v > 0.0 { v } else { variance_floor };
    let moments = WelchMoments {
        mean_a: estimate_mean(&a1)?,
        var_a: floored(estimate_variance(&a1, &a2)?),
        n_a: a.len(),
        mean_b: estimate_mean(&b1)?,
        var_b: floored(estimate_variance(&b1, &b2)?),
        n_b: b.len(),
    };
    welch_from_moments(&moments, h, NullDistribution::StudentT, Method::Est, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::mechanism::{PrivacyBudget, StreamRng};

    #[test]
    fn floor_keeps_statistic_defined() {
        // point masses at 0 under a tiny budget give wildly negative variance
        // estimates most of the time
        let m = DomainBound::new(1.0).unwrap();
        let a = RawSample::new(vec![0.0; 10], m).unwrap();
        let b = RawSample::new(vec![0.0; 10], m).unwrap();
        let split = BudgetSplit::even(PrivacyBudget::new(0.2).unwrap());
        let h = Hypothesis::equal_means(0.05).unwrap();
        for seed in 0..50 {
            let r = est_test(&a, &b, split, &h, &mut StreamRng::new(seed)).unwrap();
            assert!(r.statistic.is_finite());
            assert_eq!(r.method, Method::Est);
        }
    }

    #[test]
    fn zero_floor_with_nonpositive_estimates_is_degenerate() {
        let m = DomainBound::new(1.0).unwrap();
        let a = RawSample::new(vec![0.0; 2], m).unwrap();
        let split = BudgetSplit::even(PrivacyBudget::new(0.1).unwrap());
        let h = Hypothesis::equal_means(0.05).unwrap();
        let degenerate = (0..200).any(|seed| {
            matches!(
                est_test_with_floor(&a, &a, split, &h, 0.0, &mut StreamRng::new(seed)),
                Err(Error::Degenerate(_))
            )
        });
        assert!(degenerate);
    }

    #[test]
    fn mismatched_domains_rejected() {
        let a = RawSample::new(vec![0.0, 1.0], DomainBound::new(1.0).unwrap()).unwrap();
        let b = RawSample::new(vec![0.0, 1.0], DomainBound::new(2.0).unwrap()).unwrap();
        let split = BudgetSplit::even(PrivacyBudget::new(1.0).unwrap());
        let h = Hypothesis::equal_means(0.05).unwrap();
        assert!(est_test(&a, &b, split, &h, &mut StreamRng::new(0)).is_err());
    }
}
