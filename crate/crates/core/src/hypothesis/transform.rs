use crate::error::{Error, Result};
use crate::mechanism::{DomainBound, OneBitMechanism, PrivacyBudget, RandomSource};
use crate::numerics::Probability;

use super::welch::welch_on_values;
use super::{
    same_bound, BinarySampleSummary, Hypothesis, Method, NullDistribution, RawSample, Tail,
    TestResult,
};

/// The null difference of bit means equivalent to `mu_A - mu_B = d0`:
/// `(d0 / m) * (e^eps - 1) / (e^eps + 1)`.
pub fn transformed_null(d0: f64, eps: PrivacyBudget, bound: DomainBound) -> f64 {
    let e = eps.get().exp();
    (d0 / bound.get()) * (e - 1.0) / (e + 1.0)
}

/// Transformation-based test with Student-t p-values.
pub fn bin_test<R: RandomSource + ?Sized>(
    a: &RawSample,
    b: &RawSample,
    eps: PrivacyBudget,
    h: &Hypothesis,
    rng: &mut R,
) -> Result<TestResult> {
    bin_test_with(a, b, eps, h, NullDistribution::StudentT, rng)
}

/// Privatize every counter of `a` then `b` to one bit, and run Welch's test
/// on the 0/1 samples against the transformed null. On binary data Welch's
/// standard error is exactly `sqrt(sum over groups of (f - f^2)/(n - 1))`
/// with `f` the frequency of ones.
pub fn bin_test_with<R: RandomSource + ?Sized>(
    a: &RawSample,
    b: &RawSample,
    eps: PrivacyBudget,
    h: &Hypothesis,
    reference: NullDistribution,
    rng: &mut R,
) -> Result<TestResult> {
    let bound = same_bound(a, b)?;
    let mech = OneBitMechanism::new(eps, bound);
    let a_bits = privatize(&mech, a.values(), rng)?;
    let b_bits = privatize(&mech, b.values(), rng)?;
    let d0_bin = transformed_null(h.d0, eps, bound);
    let h_bin = Hypothesis { d0: d0_bin, ..*h };
    welch_on_values(
        &a_bits,
        &b_bits,
        &h_bin,
        reference,
        Method::Bin,
        Some(d0_bin),
    )
    .map_err(|e| match e {
        Error::Degenerate(_) => Error::degenerate(
            "every privatized bit is identical in both samples; the transformed test is undefined",
        ),
        other => other,
    })
}

fn privatize<R: RandomSource + ?Sized>(
    mech: &OneBitMechanism,
    xs: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    xs.iter()
        .map(|&x| mech.randomize(x, rng).map(|b| b.as_f64()))
        .collect()
}

/// Rejection threshold `z0 = sqrt((1/(2 n_A) + 1/(2 n_B)) ln(1/alpha))` of
/// the bounded-differences rule.
pub fn mcdiarmid_threshold(n_a: u64, n_b: u64, alpha: Probability) -> f64 {
    let (na, nb) = (n_a as f64, n_b as f64);
    ((0.5 / na + 0.5 / nb) * (1.0 / alpha.get()).ln()).sqrt()
}

/// The rule rejects when the statistic reaches the threshold, boundary
/// included.
pub fn mcdiarmid_rejects(z: f64, z0: f64) -> bool {
    z >= z0
}

/// One-sided distribution-free test on bit counts.
///
/// For `Tail::Greater` the statistic is `f_A - f_B - d0_bin`; for
/// `Tail::Less` it is `d0_bin - (f_A - f_B)`. The reported p-value is the
/// tail bound `exp(-2 z^2 / (1/n_A + 1/n_B))`, which equals `alpha` exactly
/// at `z = z0`, where the rule still rejects.
pub fn bin_test_mcdiarmid(
    a: BinarySampleSummary,
    b: BinarySampleSummary,
    h: &Hypothesis,
    eps: PrivacyBudget,
    bound: DomainBound,
) -> Result<TestResult> {
    let d0_bin = transformed_null(h.d0, eps, bound);
    let diff = a.frequency() - b.frequency();
    let z = match h.tail {
        Tail::Greater => diff - d0_bin,
        Tail::Less => d0_bin - diff,
        Tail::TwoSided => {
            return Err(Error::Unsupported(
                "the McDiarmid rule is one-sided; use tail greater or less".into(),
            ))
        }
    };
    let z0 = mcdiarmid_threshold(a.n(), b.n(), h.alpha);
    let spread = 1.0 / a.n() as f64 + 1.0 / b.n() as f64;
    let p = if z > 0.0 {
        (-2.0 * z * z / spread).exp()
    } else {
        1.0
    };
    Ok(TestResult {
        statistic: z,
        df: None,
        p_value: Probability::clamped(p),
        reject: mcdiarmid_rejects(z, z0),
        method: Method::Mcdiarmid,
        transformed_null: Some(d0_bin),
    })
}

/// Privatize both samples and apply [`bin_test_mcdiarmid`] to the counts.
pub(crate) fn mcdiarmid_on_samples<R: RandomSource + ?Sized>(
    a: &RawSample,
    b: &RawSample,
    eps: PrivacyBudget,
    h: &Hypothesis,
    rng: &mut R,
) -> Result<TestResult> {
    let bound = same_bound(a, b)?;
    let mech = OneBitMechanism::new(eps, bound);
    let a_bits = mech.randomize_all(a.values(), rng)?;
    let b_bits = mech.randomize_all(b.values(), rng)?;
    bin_test_mcdiarmid(
        BinarySampleSummary::from_bits(&a_bits)?,
        BinarySampleSummary::from_bits(&b_bits)?,
        h,
        eps,
        bound,
    )
}
