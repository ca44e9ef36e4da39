//! Two-sample mean-comparison tests.
//!
//! All tests decide `H0: mu_A - mu_B = d0` at significance level `alpha`:
//!
//! * [`welch_t`] runs Welch's unequal-variance t-test on exact counters.
//! * [`est_test`] plugs privately estimated means and variances into the
//!   Welch statistic. It carries no error guarantee.
//! * [`bin_test`] privatizes every counter to one bit and tests the bit
//!   means against the transformed null `d0 (e^eps - 1) / (m (e^eps + 1))`.
//!   The decision carries over to the original hypothesis because the
//!   transform is strictly increasing.
//! * [`bin_test_mcdiarmid`] is the distribution-free one-sided rule on bit
//!   counts with threshold `sqrt((1/(2 n_A) + 1/(2 n_B)) ln(1/alpha))`.
//! * [`mix_test`] handles populations where only some users need privacy:
//!   their bits are rescaled to be mean-compatible with exact counters.

mod estimation;
mod hybrid;
mod transform;
mod welch;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::DomainBound;
use crate::numerics::{DegreesOfFreedom, Probability};

pub use estimation::{default_variance_floor, est_test, est_test_with_floor};
pub use hybrid::{mix_sample, mix_test, mix_test_per_user, rescale_bit, MixedValue, Provenance};
pub(crate) use transform::mcdiarmid_on_samples;
pub use transform::{
    bin_test, bin_test_mcdiarmid, bin_test_with, mcdiarmid_rejects, mcdiarmid_threshold,
    transformed_null,
};
pub use welch::{welch_from_moments, welch_t, WelchMoments};

/// Direction of the alternative hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// `mu_A - mu_B != d0`
    TwoSided,
    /// `mu_A - mu_B > d0`
    Greater,
    /// `mu_A - mu_B < d0`
    Less,
}

impl std::str::FromStr for Tail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_sided" | "two-sided" => Ok(Tail::TwoSided),
            "greater" => Ok(Tail::Greater),
            "less" => Ok(Tail::Less),
            other => Err(Error::domain(format!(
                "unknown tail {other:?}, expected two_sided, greater or less"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub d0: f64,
    pub tail: Tail,
    pub alpha: Probability,
}

impl Hypothesis {
    pub fn new(d0: f64, tail: Tail, alpha: f64) -> Result<Self> {
        if !d0.is_finite() {
            return Err(Error::domain(format!("d0 must be finite, got {d0}")));
        }
        Ok(Hypothesis {
            d0,
            tail,
            alpha: Probability::open(alpha)?,
        })
    }

    /// `H0: mu_A = mu_B` against the two-sided alternative.
    pub fn equal_means(alpha: f64) -> Result<Self> {
        Hypothesis::new(0.0, Tail::TwoSided, alpha)
    }
}

/// Exact counters from one group.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    values: Vec<f64>,
    bound: DomainBound,
}

impl RawSample {
    pub fn new(values: Vec<f64>, bound: DomainBound) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::domain(format!(
                "a sample needs at least two counters, got {}",
                values.len()
            )));
        }
        for &v in &values {
            bound.check(v)?;
        }
        Ok(RawSample { values, bound })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bound(&self) -> DomainBound {
        self.bound
    }

    pub fn mean(&self) -> f64 {
        welch::mean(&self.values)
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        welch::variance(&self.values, self.mean())
    }
}

/// Number of ones among `n` privatized bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarySampleSummary {
    ones: u64,
    n: u64,
}

impl BinarySampleSummary {
    pub fn new(ones: u64, n: u64) -> Result<Self> {
        if n == 0 || ones > n {
            return Err(Error::domain(format!(
                "binary summary needs 0 <= ones <= n and n >= 1, got ones = {ones}, n = {n}"
            )));
        }
        Ok(BinarySampleSummary { ones, n })
    }

    pub fn from_bits(bits: &[crate::mechanism::LdpBit]) -> Result<Self> {
        let ones = bits.iter().filter(|b| b.is_one()).count() as u64;
        BinarySampleSummary::new(ones, bits.len() as u64)
    }

    pub fn ones(&self) -> u64 {
        self.ones
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn frequency(&self) -> f64 {
        self.ones as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Welch,
    Est,
    Bin,
    Mcdiarmid,
    Mix,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Welch => "welch",
            Method::Est => "est",
            Method::Bin => "bin",
            Method::Mcdiarmid => "mcdiarmid",
            Method::Mix => "mix",
        })
    }
}

/// Reference distribution used to turn the t statistic into a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullDistribution {
    /// Student's t with Welch's degrees of freedom.
    #[default]
    StudentT,
    /// Standard normal (large-sample approximation).
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: Option<DegreesOfFreedom>,
    pub p_value: Probability,
    pub reject: bool,
    pub method: Method,
    /// The null difference actually tested after any transformation.
    pub transformed_null: Option<f64>,
}

fn same_bound(a: &RawSample, b: &RawSample) -> Result<DomainBound> {
    if a.bound() != b.bound() {
        return Err(Error::domain(format!(
            "samples must share a domain, got [0, {}] and [0, {}]",
            a.bound().get(),
            b.bound().get()
        )));
    }
    Ok(a.bound())
}
