//! The client-side 1-bit randomizer.
//!
//! A counter `x` in `[0, m]` is reported as a single bit that is `1` with
//! probability `1/(e^eps + 1) + (x/m) * (e^eps - 1)/(e^eps + 1)`. The
//! probability of either output varies between `1/(e^eps + 1)` and
//! `e^eps/(e^eps + 1)` over the whole domain, so the likelihood ratio for any
//! two inputs is at most `e^eps`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Probability;

/// The local privacy parameter epsilon.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PrivacyBudget(f64);

impl PrivacyBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(PrivacyBudget(epsilon))
        } else {
            Err(Error::domain(format!(
                "privacy budget epsilon must be positive and finite, got {epsilon}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PrivacyBudget {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        PrivacyBudget::new(value)
    }
}

impl From<PrivacyBudget> for f64 {
    fn from(eps: PrivacyBudget) -> f64 {
        eps.0
    }
}

/// Upper end `m` of the counter domain `[0, m]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DomainBound(f64);

impl DomainBound {
    pub fn new(m: f64) -> Result<Self> {
        if m > 0.0 && m.is_finite() {
            Ok(DomainBound(m))
        } else {
            Err(Error::domain(format!(
                "domain bound m must be positive and finite, got {m}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// The bound `m^2` of squared counters.
    pub fn squared(self) -> DomainBound {
        DomainBound(self.0 * self.0)
    }

    pub fn contains(self, x: f64) -> bool {
        (0.0..=self.0).contains(&x)
    }

    pub fn check(self, x: f64) -> Result<f64> {
        if self.contains(x) {
            Ok(x)
        } else {
            Err(Error::domain(format!(
                "counter {x} lies outside [0, {}]",
                self.0
            )))
        }
    }

    /// Clamp a raw reading into the domain. Meant for ingestion code; the
    /// mechanism itself never clamps.
    pub fn clamp(self, x: f64) -> f64 {
        x.clamp(0.0, self.0)
    }
}

impl TryFrom<f64> for DomainBound {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        DomainBound::new(value)
    }
}

impl From<DomainBound> for f64 {
    fn from(m: DomainBound) -> f64 {
        m.0
    }
}

/// A user's counter, checked against its domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Counter {
    value: f64,
    bound: DomainBound,
}

impl Counter {
    pub fn new(value: f64, bound: DomainBound) -> Result<Self> {
        Ok(Counter {
            value: bound.check(value)?,
            bound,
        })
    }

    pub fn clamped(value: f64, bound: DomainBound) -> Self {
        Counter {
            value: bound.clamp(value),
            bound,
        }
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn bound(self) -> DomainBound {
        self.bound
    }
}

/// A privatized report bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LdpBit {
    Zero,
    One,
}

impl LdpBit {
    pub fn is_one(self) -> bool {
        self == LdpBit::One
    }

    pub fn as_f64(self) -> f64 {
        match self {
            LdpBit::Zero => 0.0,
            LdpBit::One => 1.0,
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

impl From<bool> for LdpBit {
    fn from(b: bool) -> Self {
        if b {
            LdpBit::One
        } else {
            LdpBit::Zero
        }
    }
}

/// Source of uniform variates in `[0, 1)`.
pub trait RandomSource {
    fn next_uniform(&mut self) -> f64;
}

impl<R: RandomSource + ?Sized> RandomSource for &mut R {
    fn next_uniform(&mut self) -> f64 {
        (**self).next_uniform()
    }
}

/// Deterministic counter-based generator (ChaCha8) keyed by a 64-bit seed.
///
/// Substreams share the key and differ in the ChaCha stream id, so each
/// `(seed, a, b)` triple addresses an independent sequence that does not
/// depend on how many other substreams were consumed.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        StreamRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn substream(seed: u64, a: u64, b: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(mix64(a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ mix64(b)));
        StreamRng { inner }
    }
}

fn mix64(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource for StreamRng {
    fn next_uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// `M_{eps,m}` with its constants precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneBitMechanism {
    eps: PrivacyBudget,
    bound: DomainBound,
    exp_eps: f64,
}

impl OneBitMechanism {
    pub fn new(eps: PrivacyBudget, bound: DomainBound) -> Self {
        OneBitMechanism {
            eps,
            bound,
            exp_eps: eps.get().exp(),
        }
    }

    pub fn epsilon(&self) -> PrivacyBudget {
        self.eps
    }

    pub fn bound(&self) -> DomainBound {
        self.bound
    }

    /// `P[output = 1]` for counter `x`; errors when `x` is outside `[0, m]`.
    pub fn response_probability(&self, x: f64) -> Result<Probability> {
        let x = self.bound.check(x)?;
        Ok(Probability::clamped(self.response_probability_unchecked(x)))
    }

    fn response_probability_unchecked(&self, x: f64) -> f64 {
        let e = self.exp_eps;
        1.0 / (e + 1.0) + (x / self.bound.get()) * (e - 1.0) / (e + 1.0)
    }

    /// Draw the report bit. Consumes exactly one variate from `rng`.
    pub fn randomize<R: RandomSource + ?Sized>(&self, x: f64, rng: &mut R) -> Result<LdpBit> {
        let x = self.bound.check(x)?;
        let p = self.response_probability_unchecked(x);
        Ok(LdpBit::from(rng.next_uniform() < p))
    }

    /// Privatize a batch in order; fails on the first out-of-range counter.
    pub fn randomize_all<R: RandomSource + ?Sized>(
        &self,
        xs: &[f64],
        rng: &mut R,
    ) -> Result<Vec<LdpBit>> {
        xs.iter().map(|&x| self.randomize(x, rng)).collect()
    }

    /// Smallest and largest attainable `P[output = 1]`.
    pub fn endpoint_probabilities(&self) -> (f64, f64) {
        let e = self.exp_eps;
        (1.0 / (e + 1.0), e / (e + 1.0))
    }
}

pub fn response_probability(x: Counter, eps: PrivacyBudget) -> Result<Probability> {
    OneBitMechanism::new(eps, x.bound()).response_probability(x.value())
}

pub fn randomize<R: RandomSource + ?Sized>(
    x: Counter,
    eps: PrivacyBudget,
    rng: &mut R,
) -> Result<LdpBit> {
    OneBitMechanism::new(eps, x.bound()).randomize(x.value(), rng)
}

/// The worst-case likelihood ratio `P[M(x) = b] / P[M(y) = b]` over both
/// outputs and all `x, y` in `[0, m]`. The response probability is affine in
/// `x`, so the extremes sit at the endpoints.
pub fn privacy_ratio_bound(eps: PrivacyBudget, m: DomainBound) -> f64 {
    let (lo, hi) = OneBitMechanism::new(eps, m).endpoint_probabilities();
    // 1 - lo and 1 - hi in closed form; subtracting loses digits for large eps
    let e = eps.get().exp();
    let (not_lo, not_hi) = (e / (e + 1.0), 1.0 / (e + 1.0));
    let ratio_one = hi / lo;
    let ratio_zero = not_lo / not_hi;
    ratio_one.max(ratio_zero)
}
