use crate::error::{Error, Result};
use crate::numerics::{normal_cdf_raw, student_t_cdf_raw, DegreesOfFreedom, Probability};

use super::{Hypothesis, Method, NullDistribution, RawSample, Tail, TestResult};

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn variance(xs: &[f64], mean: f64) -> f64 {
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    ss / (xs.len() as f64 - 1.0)
}

/// Summary statistics entering Welch's statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchMoments {
    pub mean_a: f64,
    pub var_a: f64,
    pub n_a: usize,
    pub mean_b: f64,
    pub var_b: f64,
    pub n_b: usize,
}

impl WelchMoments {
    pub(crate) fn from_values(a: &[f64], b: &[f64]) -> Self {
        let mean_a = mean(a);
        let mean_b = mean(b);
        WelchMoments {
            mean_a,
            var_a: variance(a, mean_a),
            n_a: a.len(),
            mean_b,
            var_b: variance(b, mean_b),
            n_b: b.len(),
        }
    }

    /// `t = ((mu_A - mu_B) - d0) / sqrt(s_A^2/n_A + s_B^2/n_B)` together with
    /// the Welch-Satterthwaite degrees of freedom.
    pub fn statistic(&self, d0: f64) -> Result<(f64, f64)> {
        if self.n_a < 2 || self.n_b < 2 {
            return Err(Error::domain(
                "Welch's t-test needs at least two values per sample",
            ));
        }
        let na = self.n_a as f64;
        let nb = self.n_b as f64;
        let qa = self.var_a / na;
        let qb = self.var_b / nb;
        let se2 = qa + qb;
        if !(se2 > 0.0) {
            return Err(Error::degenerate(
                "both samples have zero variance; the t statistic is undefined",
            ));
        }
        let t = ((self.mean_a - self.mean_b) - d0) / se2.sqrt();
        let df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
        Ok((t, df))
    }
}

pub(crate) fn p_value(t: f64, df: Option<f64>, tail: Tail) -> f64 {
    let lower = |x: f64| match df {
        Some(df) => student_t_cdf_raw(x, df),
        None => normal_cdf_raw(x),
    };
    let p = match tail {
        Tail::TwoSided => 2.0 * lower(-t.abs()),
        Tail::Greater => lower(-t),
        Tail::Less => lower(t),
    };
    p.clamp(0.0, 1.0)
}

/// Run the Welch t-test from precomputed moments.
pub fn welch_from_moments(
    moments: &WelchMoments,
    h: &Hypothesis,
    reference: NullDistribution,
    method: Method,
    transformed_null: Option<f64>,
) -> Result<TestResult> {
    let (t, df) = moments.statistic(h.d0)?;
    let p = match reference {
        NullDistribution::StudentT => p_value(t, Some(df), h.tail),
        NullDistribution::Normal => p_value(t, None, h.tail),
    };
    let p_value = Probability::clamped(p);
    Ok(TestResult {
        statistic: t,
        df: match reference {
            NullDistribution::StudentT => Some(DegreesOfFreedom::new(df)?),
            NullDistribution::Normal => None,
        },
        p_value,
        reject: p < h.alpha.get(),
        method,
        transformed_null,
    })
}

pub(crate) fn welch_on_values(
    a: &[f64],
    b: &[f64],
    h: &Hypothesis,
    reference: NullDistribution,
    method: Method,
    transformed_null: Option<f64>,
) -> Result<TestResult> {
    let moments = WelchMoments::from_values(a, b);
    welch_from_moments(&moments, h, reference, method, transformed_null)
}

/// Welch's unequal-variance t-test on exact counters.
pub fn welch_t(a: &RawSample, b: &RawSample, h: &Hypothesis) -> Result<TestResult> {
    welch_on_values(
        a.values(),
        b.values(),
        h,
        NullDistribution::StudentT,
        Method::Welch,
        None,
    )
}
