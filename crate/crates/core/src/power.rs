//! Closed-form power lower bounds and sample-size planning for the
//! transformation-based test, plus the variance of rescaled hybrid samples.
//!
//! Every bound is for the one-sided alternative `mu_A - mu_B - d0 = theta > 0`.
//! With a gap `theta` the bit means differ by
//! `p_theta = (theta / m) * (e^eps - 1) / (e^eps + 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::BinarySampleSummary;
use crate::mechanism::{DomainBound, PrivacyBudget};
use crate::numerics::{normal_cdf_raw, normal_quantile_raw, Probability};

/// A true mean gap together with the mechanism parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSpec {
    pub theta: f64,
    pub eps: PrivacyBudget,
    pub bound: DomainBound,
}

impl EffectSpec {
    pub fn new(theta: f64, eps: PrivacyBudget, bound: DomainBound) -> Result<Self> {
        if !(theta > 0.0 && theta <= bound.get()) {
            return Err(Error::domain(format!(
                "theta must lie in (0, m] = (0, {}], got {theta}",
                bound.get()
            )));
        }
        Ok(EffectSpec { theta, eps, bound })
    }

    /// Gap between the two groups' bit means.
    pub fn p_theta(&self) -> f64 {
        let e = self.eps.get().exp();
        (self.theta / self.bound.get()) * (e - 1.0) / (e + 1.0)
    }
}

/// Mean of the bit distribution induced by a population with mean `mu`:
/// `(mu / m) (e^eps - 1)/(e^eps + 1) + 1/(e^eps + 1)`.
pub fn transformed_mean(mu: f64, eps: PrivacyBudget, bound: DomainBound) -> Result<Probability> {
    let mu = bound.check(mu)?;
    let e = eps.get().exp();
    Ok(Probability::clamped(
        (mu / bound.get()) * (e - 1.0) / (e + 1.0) + 1.0 / (e + 1.0),
    ))
}

fn check_alpha(alpha: f64) -> Result<f64> {
    Probability::open(alpha).map(Probability::get)
}

/// Bounded-differences power bound
/// `1 - exp(-(p_theta sqrt(2 n_A n_B / (n_A + n_B)) - sqrt(ln(1/alpha)))^2)`.
///
/// Returns `None` when the bracketed term is negative; the bound only holds
/// once samples are large enough for it to be non-negative.
pub fn power_bound_mcdiarmid(
    effect: &EffectSpec,
    n_a: u64,
    n_b: u64,
    alpha: f64,
) -> Result<Option<Probability>> {
    let alpha = check_alpha(alpha)?;
    if n_a == 0 || n_b == 0 {
        return Err(Error::domain("sample sizes must be positive"));
    }
    let (na, nb) = (n_a as f64, n_b as f64);
    let inner = effect.p_theta() * (2.0 * na * nb / (na + nb)).sqrt() - (1.0 / alpha).ln().sqrt();
    Ok(mcdiarmid_bound_from_inner(inner))
}

pub(crate) fn mcdiarmid_bound_from_inner(inner: f64) -> Option<Probability> {
    (inner >= 0.0).then(|| Probability::clamped(1.0 - (-inner * inner).exp()))
}

/// Plug-in standard error of the bit-frequency difference:
/// `sqrt(sum over groups of (f - f^2) / (n - 1))`, `f = ones / n`.
pub fn sigma_hat_from_counts(a: BinarySampleSummary, b: BinarySampleSummary) -> Result<f64> {
    if a.n() < 2 || b.n() < 2 {
        return Err(Error::domain("each group needs at least two bits"));
    }
    let term = |s: BinarySampleSummary| {
        let f = s.frequency();
        (f - f * f) / (s.n() as f64 - 1.0)
    };
    Ok((term(a) + term(b)).sqrt())
}

/// Normal-approximation bound with a plug-in standard error:
/// `1 - F(F^{-1}(1 - alpha) - p_theta / sigma_hat)`.
pub fn power_bound_normal_samplevar(
    effect: &EffectSpec,
    alpha: f64,
    sigma_hat: f64,
) -> Result<Probability> {
    let alpha = check_alpha(alpha)?;
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(Error::domain(format!(
            "sigma_hat must be positive, got {sigma_hat}"
        )));
    }
    Ok(normal_power(alpha, effect.p_theta() / sigma_hat))
}

/// Normal-approximation bound that needs only the sample sizes:
/// `1 - F(F^{-1}(1 - alpha) - p_theta sqrt(4 (n_A - 1)(n_B - 1) / (n_A + n_B - 2)))`.
pub fn power_bound_normal_sizes(
    effect: &EffectSpec,
    n_a: u64,
    n_b: u64,
    alpha: f64,
) -> Result<Probability> {
    let alpha = check_alpha(alpha)?;
    if n_a < 2 || n_b < 2 {
        return Err(Error::domain("sample sizes must be at least 2"));
    }
    let (na, nb) = (n_a as f64, n_b as f64);
    let scale = (4.0 * (na - 1.0) * (nb - 1.0) / (na + nb - 2.0)).sqrt();
    Ok(normal_power(alpha, effect.p_theta() * scale))
}

fn normal_power(alpha: f64, shift: f64) -> Probability {
    let z = normal_quantile_raw(1.0 - alpha) - shift;
    Probability::clamped(1.0 - normal_cdf_raw(z))
}

/// The three power lower bounds side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub bound_mcdiarmid: Option<Probability>,
    pub bound_normal_samplevar: Option<Probability>,
    pub bound_normal_sizes: Probability,
    /// Largest of the bounds that are present.
    pub best: Probability,
}

/// Evaluate every applicable bound. The plug-in bound is only computed when
/// `sigma_hat` is supplied, i.e. after the bits have been collected.
pub fn power_report(
    effect: &EffectSpec,
    n_a: u64,
    n_b: u64,
    alpha: f64,
    sigma_hat: Option<f64>,
) -> Result<PowerReport> {
    let bound_mcdiarmid = power_bound_mcdiarmid(effect, n_a, n_b, alpha)?;
    let bound_normal_samplevar = sigma_hat
        .map(|s| power_bound_normal_samplevar(effect, alpha, s))
        .transpose()?;
    let bound_normal_sizes = power_bound_normal_sizes(effect, n_a, n_b, alpha)?;
    let best = [
        bound_mcdiarmid,
        bound_normal_samplevar,
        Some(bound_normal_sizes),
    ]
    .into_iter()
    .flatten()
    .fold(bound_normal_sizes, |acc, p| if p > acc { p } else { acc });
    Ok(PowerReport {
        bound_mcdiarmid,
        bound_normal_samplevar,
        bound_normal_sizes,
        best,
    })
}

/// Unrounded per-group size for power `1 - beta` with `n_A = n_B`:
/// `(F^{-1}(1 - alpha) - F^{-1}(beta))^2 / (2 p_theta^2) + 1`.
pub fn sample_size_exact(effect: &EffectSpec, alpha: f64, beta: f64) -> Result<f64> {
    let alpha = check_alpha(alpha)?;
    let beta = check_alpha(beta)?;
    let p = effect.p_theta();
    if !(p > 0.0) {
        return Err(Error::domain(
            "p_theta is zero; no finite sample size reaches the target",
        ));
    }
    let gap = normal_quantile_raw(1.0 - alpha) - normal_quantile_raw(beta);
    Ok(gap * gap / (2.0 * p * p) + 1.0)
}

/// Per-group sample size, rounded up.
pub fn sample_size(effect: &EffectSpec, alpha: f64, beta: f64) -> Result<u64> {
    let n = sample_size_exact(effect, alpha, beta)?;
    if n > u64::MAX as f64 {
        return Err(Error::domain(format!(
            "required sample size {n:e} overflows"
        )));
    }
    Ok(n.ceil() as u64)
}

/// Population parameters for the variance of hybrid (rescaled) samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridVarianceSpec {
    /// Variance of the exact counters.
    pub sigma2: f64,
    /// Mean of the exact counters; fixes the bit variance of private users.
    pub mu: f64,
    /// Fraction of users who send a rescaled private bit.
    pub r: f64,
    pub eps: PrivacyBudget,
    pub bound: DomainBound,
}

/// `sigma^2 (1 - r) + r m^2 (e^eps + 1)^2 / (e^eps - 1)^2 * p (1 - p)` where `p`
/// is the transformed mean at `mu`.
pub fn hybrid_variance(spec: &HybridVarianceSpec) -> Result<f64> {
    if !(spec.sigma2 >= 0.0 && spec.sigma2.is_finite()) {
        return Err(Error::domain(format!(
            "sigma2 must be non-negative, got {}",
            spec.sigma2
        )));
    }
    let r = Probability::new(spec.r)?.get();
    let p = transformed_mean(spec.mu, spec.eps, spec.bound)?.get();
    let e = spec.eps.get().exp();
    let m = spec.bound.get();
    let scale = m * (e + 1.0) / (e - 1.0);
    Ok(spec.sigma2 * (1.0 - r) + r * scale * scale * p * (1.0 - p))
}
