//! Special functions backing every p-value and power computation: the
//! standard normal CDF and quantile, and the Student t CDF for real-valued
//! degrees of freedom.
//!
//! Everything here is implemented from scratch so results are reproducible
//! bit-for-bit without an external math library.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!(
                "probability must lie in [0, 1], got {value}"
            )))
        }
    }

    /// Like [`Probability::new`] but additionally rejects the endpoints, as
    /// required for significance levels and quantile arguments.
    pub fn open(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!(
                "probability must lie in (0, 1), got {value}"
            )))
        }
    }

    pub(crate) fn clamped(value: f64) -> Self {
        Probability(value.clamp(0.0, 1.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Degrees of freedom of a t distribution. Welch's approximation produces
/// fractional values, so any positive real is accepted.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DegreesOfFreedom(f64);

impl DegreesOfFreedom {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && !value.is_nan() {
            Ok(DegreesOfFreedom(value))
        } else {
            Err(Error::domain(format!(
                "degrees of freedom must be positive, got {value}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for DegreesOfFreedom {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        DegreesOfFreedom::new(value)
    }
}

impl From<DegreesOfFreedom> for f64 {
    fn from(df: DegreesOfFreedom) -> f64 {
        df.0
    }
}

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Below this argument erfc is computed as `1 - erf` from the power series,
/// above it from the Laplace continued fraction.
const ERFC_SWITCH: f64 = 2.5;

/// Complementary error function for `z >= 0`.
fn erfc_nonneg(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < ERFC_SWITCH {
        // erf(z) = 2/sqrt(pi) * exp(-z^2) * sum_n (2z^2)^n z / (1*3*...*(2n+1)),
        // all terms positive.
        let two_z2 = 2.0 * z * z;
        let mut term = z;
        let mut sum = z;
        let mut k = 1.0;
        while term > sum * 1e-17 {
            term *= two_z2 / (2.0 * k + 1.0);
            sum += term;
            k += 1.0;
        }
        1.0 - 2.0 * FRAC_1_SQRT_PI * (-z * z).exp() * sum
    } else {
        // erfc(z) = exp(-z^2)/sqrt(pi) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
        // evaluated with the modified Lentz method.
        const TINY: f64 = 1e-300;
        let mut f = z;
        let mut c = f;
        let mut d = 0.0;
        for k in 1..500 {
            let a = k as f64 * 0.5;
            d = z + a * d;
            if d.abs() < TINY {
                d = TINY;
            }
            d = 1.0 / d;
            c = z + a / c;
            if c.abs() < TINY {
                c = TINY;
            }
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        FRAC_1_SQRT_PI * (-z * z).exp() / f
    }
}

/// Upper tail `1 - F(|x|)` of the standard normal, accurate in relative
/// terms far into the tail.
fn normal_upper_tail(x: f64) -> f64 {
    0.5 * erfc_nonneg(x.abs() / SQRT_2)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> Probability {
    Probability(normal_cdf_raw(x))
}

pub(crate) fn normal_cdf_raw(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let tail = normal_upper_tail(x);
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`normal_cdf`] on the open interval `(0, 1)`.
///
/// Uses Acklam's rational approximation followed by one Newton step
/// against [`normal_cdf`].
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "normal quantile needs p in (0, 1), got {p}"
        )));
    }
    Ok(normal_quantile_raw(p))
}

pub(crate) fn normal_quantile_raw(p: f64) -> f64 {
    if p > 0.5 {
        // 1 - p is exact here
        return -normal_quantile_raw(1.0 - p);
    }
    let x = acklam_lower(p);
    // Newton refinement; for p <= 0.5 the CDF is the lower tail, computed
    // without cancellation.
    let err = normal_cdf_raw(x) - p;
    x - err / normal_pdf(x)
}

#[allow(clippy::excessive_precision)]
fn acklam_lower(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const BETA_CF_TOL: f64 = 1e-12;
const BETA_CF_MAX_ITER: usize = 300;

/// Continued fraction part of the regularized incomplete beta function,
/// modified Lentz method.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < BETA_CF_TOL {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`. Takes `y = 1 - x` separately so
/// callers can pass it without cancellation.
pub(crate) fn regularized_incomplete_beta(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * y.ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, y) / b
    }
}

/// CDF of Student's t distribution with (possibly fractional) `df`.
pub fn student_t_cdf(t: f64, df: DegreesOfFreedom) -> Probability {
    Probability::clamped(student_t_cdf_raw(t, df.get()))
}

pub(crate) fn student_t_cdf_raw(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let t2 = t * t;
    let x = df / (df + t2);
    let y = t2 / (df + t2);
    let tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x, y);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}
