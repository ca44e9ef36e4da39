//! Server-side decoding of privatized reports.
//!
//! Outputs are never clamped: the mean estimate may fall outside `[0, m]`
//! and the variance estimate may be negative. [`clamp_mean`] and
//! [`clamp_variance`] exist for presentation only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{DomainBound, LdpBit, OneBitMechanism, PrivacyBudget, RandomSource};

/// Bits reported by `n` users under one mechanism `M_{eps,m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BitSample {
    bits: Vec<LdpBit>,
    eps: PrivacyBudget,
    bound: DomainBound,
}

impl BitSample {
    pub fn new(bits: Vec<LdpBit>, eps: PrivacyBudget, bound: DomainBound) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::domain("bit sample must contain at least one report"));
        }
        Ok(BitSample { bits, eps, bound })
    }

    pub fn bits(&self) -> &[LdpBit] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|b| b.is_one()).count()
    }

    pub fn epsilon(&self) -> PrivacyBudget {
        self.eps
    }

    pub fn bound(&self) -> DomainBound {
        self.bound
    }
}

/// Sequential-composition split of a total budget across the two reports
/// used for variance estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSplit {
    pub eps1: PrivacyBudget,
    pub eps2: PrivacyBudget,
}

impl BudgetSplit {
    pub fn new(eps1: PrivacyBudget, eps2: PrivacyBudget) -> Self {
        BudgetSplit { eps1, eps2 }
    }

    /// `eps1 = eps2 = total / 2`.
    pub fn even(total: PrivacyBudget) -> Self {
        let half = PrivacyBudget::new(total.get() / 2.0).expect("half of a valid budget is valid");
        BudgetSplit {
            eps1: half,
            eps2: half,
        }
    }

    pub fn total(&self) -> f64 {
        self.eps1.get() + self.eps2.get()
    }
}

/// The pair of bits one user sends for mean-and-variance estimation: the
/// first privatizes `x` over `[0, m]`, the second `x^2` over `[0, m^2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoBitReport {
    pub first: LdpBit,
    pub second: LdpBit,
}

/// Decode the unbiased mean estimate from one bit per user.
pub fn estimate_mean(sample: &BitSample) -> Result<f64> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::domain("cannot estimate a mean from zero reports"));
    }
    Ok(decode_mean(sample.ones(), n, sample.eps, sample.bound))
}

/// `(m/n) * sum_i (b_i (e^eps + 1) - 1) / (e^eps - 1)` from the count of ones.
pub(crate) fn decode_mean(ones: usize, n: usize, eps: PrivacyBudget, bound: DomainBound) -> f64 {
    let e = eps.get().exp();
    let frac = ones as f64 / n as f64;
    bound.get() * (frac * (e + 1.0) - 1.0) / (e - 1.0)
}

/// Produce a user's two-bit report. Consumes exactly two variates, the first
/// for `x` and the second for `x^2`.
pub fn collect_two_bit<R: RandomSource + ?Sized>(
    x: f64,
    bound: DomainBound,
    split: BudgetSplit,
    rng: &mut R,
) -> Result<TwoBitReport> {
    let x = bound.check(x)?;
    let first = OneBitMechanism::new(split.eps1, bound).randomize(x, rng)?;
    let second = OneBitMechanism::new(split.eps2, bound.squared()).randomize(x * x, rng)?;
    Ok(TwoBitReport { first, second })
}

/// Collect two-bit reports for every user and return them as the aligned
/// first-bit and second-bit samples.
pub fn collect_two_bit_all<R: RandomSource + ?Sized>(
    xs: &[f64],
    bound: DomainBound,
    split: BudgetSplit,
    rng: &mut R,
) -> Result<(BitSample, BitSample)> {
    let mut first = Vec::with_capacity(xs.len());
    let mut second = Vec::with_capacity(xs.len());
    for &x in xs {
        let report = collect_two_bit(x, bound, split, rng)?;
        first.push(report.first);
        second.push(report.second);
    }
    Ok((
        BitSample::new(first, split.eps1, bound)?,
        BitSample::new(second, split.eps2, bound.squared())?,
    ))
}

/// Sample-variance estimate `n (mu2_hat - mu1_hat^2) / (n - 1)`, where
/// `mu1_hat` decodes the first bits over `[0, m]` and `mu2_hat` the second
/// bits over `[0, m^2]`.
pub fn estimate_variance(first_bits: &BitSample, second_bits: &BitSample) -> Result<f64> {
    let n = first_bits.len();
    if n != second_bits.len() {
        return Err(Error::domain(format!(
            "first and second bit samples must be aligned, got {} and {}",
            n,
            second_bits.len()
        )));
    }
    if n < 2 {
        return Err(Error::domain(
            "variance estimation needs at least two users",
        ));
    }
    let m = first_bits.bound.get();
    if second_bits.bound.get() != m * m {
        return Err(Error::domain(format!(
            "second bits must be collected over [0, m^2] = [0, {}], got [0, {}]",
            m * m,
            second_bits.bound.get()
        )));
    }
    let mu1 = estimate_mean(first_bits)?;
    let mu2 = estimate_mean(second_bits)?;
    let n = n as f64;
    Ok(n * (mu2 - mu1 * mu1) / (n - 1.0))
}

pub fn clamp_mean(estimate: f64, bound: DomainBound) -> f64 {
    bound.clamp(estimate)
}

pub fn clamp_variance(estimate: f64) -> f64 {
    estimate.max(0.0)
}
