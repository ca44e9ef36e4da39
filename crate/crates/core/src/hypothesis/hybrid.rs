use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{DomainBound, LdpBit, OneBitMechanism, PrivacyBudget, RandomSource};

use super::welch::welch_on_values;
use super::{same_bound, Hypothesis, Method, NullDistribution, RawSample, TestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    RescaledBit,
}

/// A value as received by the server in the hybrid model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedValue {
    pub value: f64,
    pub provenance: Provenance,
}

/// Map a bit to `-m/(e^eps - 1)` or `m e^eps/(e^eps - 1)`. The rescaled value
/// has the same expectation as the counter that produced the bit.
pub fn rescale_bit(bit: LdpBit, eps: PrivacyBudget, bound: DomainBound) -> MixedValue {
    let e = eps.get().exp();
    let m = bound.get();
    let value = match bit {
        LdpBit::Zero => -m / (e - 1.0),
        LdpBit::One => m * e / (e - 1.0),
    };
    MixedValue {
        value,
        provenance: Provenance::RescaledBit,
    }
}

/// Build the mixed sample: users with `Some(eps)` send a rescaled private
/// bit, users with `None` send their exact counter. Consumes one variate per
/// private user, in order.
pub fn mix_sample<R: RandomSource + ?Sized>(
    values: &[f64],
    budgets: &[Option<PrivacyBudget>],
    bound: DomainBound,
    rng: &mut R,
) -> Result<Vec<MixedValue>> {
    if values.len() != budgets.len() {
        return Err(Error::domain(format!(
            "privacy flags must align with the sample: {} counters, {} flags",
            values.len(),
            budgets.len()
        )));
    }
    values
        .iter()
        .zip(budgets)
        .map(|(&x, budget)| match budget {
            Some(eps) => {
                let bit = OneBitMechanism::new(*eps, bound).randomize(x, rng)?;
                Ok(rescale_bit(bit, *eps, bound))
            }
            None => Ok(MixedValue {
                value: bound.check(x)?,
                provenance: Provenance::Exact,
            }),
        })
        .collect()
}

/// Hybrid-privacy test with one budget for every flagged user.
#[allow(clippy::too_many_arguments)]
pub fn mix_test<R: RandomSource + ?Sized>(
    a: &RawSample,
    a_ldp_flags: &[bool],
    b: &RawSample,
    b_ldp_flags: &[bool],
    eps: PrivacyBudget,
    h: &Hypothesis,
    rng: &mut R,
) -> Result<TestResult> {
    let to_budgets = |flags: &[bool]| -> Vec<Option<PrivacyBudget>> {
        flags.iter().map(|&f| f.then_some(eps)).collect()
    };
    mix_test_per_user(
        a,
        &to_budgets(a_ldp_flags),
        b,
        &to_budgets(b_ldp_flags),
        h,
        rng,
    )
}

/// Hybrid-privacy test where every user may carry its own budget. Welch's
/// test runs on the mixed samples against the original `d0`.
pub fn mix_test_per_user<R: RandomSource + ?Sized>(
    a: &RawSample,
    a_budgets: &[Option<PrivacyBudget>],
    b: &RawSample,
    b_budgets: &[Option<PrivacyBudget>],
    h: &Hypothesis,
    rng: &mut R,
) -> Result<TestResult> {
    let bound = same_bound(a, b)?;
    let a_mix: Vec<f64> = mix_sample(a.values(), a_budgets, bound, rng)?
        .into_iter()
        .map(|v| v.value)
        .collect();
    let b_mix: Vec<f64> = mix_sample(b.values(), b_budgets, bound, rng)?
        .into_iter()
        .map(|v| v.value)
        .collect();
    welch_on_values(
        &a_mix,
        &b_mix,
        h,
        NullDistribution::StudentT,
        Method::Mix,
        Some(h.d0),
    )
}
