use std::path::PathBuf;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::read_counters;
use crate::error::{Error, Result};
use crate::hypothesis::RawSample;
use crate::mechanism::{DomainBound, StreamRng};
use crate::numerics::{normal_cdf_raw, normal_quantile_raw};

/// Shape of a synthetic counter distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PopulationKind {
    PointMass {
        value: f64,
    },
    /// `hi` with probability `p`, otherwise `lo`.
    TwoPoint {
        p: f64,
        lo: f64,
        hi: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Normal restricted to `[0, m]`. `sigma = 0` is a point mass at `mu`.
    TruncatedNormal {
        mu: f64,
        sigma: f64,
    },
    /// Resample with replacement from a counter file.
    Empirical {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    #[serde(flatten)]
    pub kind: PopulationKind,
    pub bound: DomainBound,
    /// Added to every draw; the result is clamped into `[0, m]`.
    #[serde(default)]
    pub shift: f64,
}

impl PopulationSpec {
    pub fn new(kind: PopulationKind, bound: DomainBound) -> Self {
        PopulationSpec {
            kind,
            bound,
            shift: 0.0,
        }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    /// Validate parameters and load any backing file.
    pub fn prepare(&self) -> Result<Population> {
        let m = self.bound.get();
        let in_domain = |name: &str, v: f64| -> Result<()> {
            if self.bound.contains(v) {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} = {v} lies outside [0, {m}]")))
            }
        };
        if !self.shift.is_finite() {
            return Err(Error::domain("shift must be finite"));
        }
        let sampler = match &self.kind {
            PopulationKind::PointMass { value } => {
                in_domain("value", *value)?;
                Sampler::Constant(*value)
            }
            PopulationKind::TwoPoint { p, lo, hi } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::domain(format!("p = {p} lies outside [0, 1]")));
                }
                in_domain("lo", *lo)?;
                in_domain("hi", *hi)?;
                Sampler::TwoPoint {
                    p: *p,
                    lo: *lo,
                    hi: *hi,
                }
            }
            PopulationKind::Uniform { lo, hi } => {
                in_domain("lo", *lo)?;
                in_domain("hi", *hi)?;
                if lo > hi {
                    return Err(Error::domain(format!(
                        "uniform needs lo <= hi, got {lo} > {hi}"
                    )));
                }
                Sampler::Uniform { lo: *lo, hi: *hi }
            }
            PopulationKind::TruncatedNormal { mu, sigma } => {
                if !(mu.is_finite() && *sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::domain(format!(
                        "truncated normal needs finite mu and sigma >= 0, got mu = {mu}, sigma = {sigma}"
                    )));
                }
                TruncatedNormal::sampler(*mu, *sigma, m)?
            }
            PopulationKind::Empirical { path } => {
                let values = read_counters(path)?;
                if values.is_empty() {
                    return Err(Error::domain(format!(
                        "{} holds no counters",
                        path.display()
                    )));
                }
                if let Some(v) = values.iter().find(|v| !self.bound.contains(**v)) {
                    return Err(Error::domain(format!(
                        "{}: counter {v} lies outside [0, {m}]",
                        path.display()
                    )));
                }
                Sampler::Empirical(Arc::new(values))
            }
        };
        Ok(Population {
            sampler,
            bound: self.bound,
            shift: self.shift,
        })
    }
}

#[derive(Debug, Clone)]
enum Sampler {
    Constant(f64),
    TwoPoint {
        p: f64,
        lo: f64,
        hi: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Rejection {
        normal: Normal<f64>,
        hi: f64,
    },
    Inversion {
        mu: f64,
        sigma: f64,
        lo_cdf: f64,
        hi_cdf: f64,
        flip: bool,
    },
    Empirical(Arc<Vec<f64>>),
}

struct TruncatedNormal;

impl TruncatedNormal {
    fn sampler(mu: f64, sigma: f64, m: f64) -> Result<Sampler> {
        if sigma == 0.0 {
            if !(0.0..=m).contains(&mu) {
                return Err(Error::domain(format!("mu = {mu} lies outside [0, {m}]")));
            }
            return Ok(Sampler::Constant(mu));
        }
        let a = (0.0 - mu) / sigma;
        let b = (m - mu) / sigma;
        let mass = normal_cdf_raw(b) - normal_cdf_raw(a);
        if mass > 0.25 {
            let normal = Normal::new(mu, sigma).map_err(|e| Error::domain(e.to_string()))?;
            return Ok(Sampler::Rejection { normal, hi: m });
        }
        // mirror upper-tail windows so the cdf values stay away from 1
        let flip = a > 0.0;
        let (a, b) = if flip { (-b, -a) } else { (a, b) };
        let (lo_cdf, hi_cdf) = (normal_cdf_raw(a), normal_cdf_raw(b));
        if !(hi_cdf > lo_cdf) {
            return Err(Error::domain(format!(
                "truncated normal with mu = {mu}, sigma = {sigma} has no representable mass in [0, {m}]"
            )));
        }
        Ok(Sampler::Inversion {
            mu,
            sigma,
            lo_cdf,
            hi_cdf,
            flip,
        })
    }
}

/// A validated population ready for sampling.
#[derive(Debug, Clone)]
pub struct Population {
    sampler: Sampler,
    bound: DomainBound,
    shift: f64,
}

/// A drawn sample together with the number of draws pushed back into the
/// domain by the shift.
#[derive(Debug, Clone)]
pub struct Draw {
    pub sample: RawSample,
    pub clamped: u64,
}

impl Population {
    pub fn bound(&self) -> DomainBound {
        self.bound
    }

    fn base(&self, rng: &mut StreamRng) -> f64 {
        match &self.sampler {
            Sampler::Constant(c) => *c,
            Sampler::TwoPoint { p, lo, hi } => {
                if rng.gen::<f64>() < *p {
                    *hi
                } else {
                    *lo
                }
            }
            Sampler::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            Sampler::Rejection { normal, hi } => loop {
                let x = normal.sample(rng);
                if (0.0..=*hi).contains(&x) {
                    break x;
                }
            },
            Sampler::Inversion {
                mu,
                sigma,
                lo_cdf,
                hi_cdf,
                flip,
            } => {
                let u = lo_cdf + (hi_cdf - lo_cdf) * rng.gen::<f64>();
                let z = normal_quantile_raw(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON));
                let z = if *flip { -z } else { z };
                self.bound.clamp(mu + sigma * z)
            }
            Sampler::Empirical(values) => values[rng.gen_range(0..values.len())],
        }
    }

    /// Draw `n` i.i.d. counters.
    pub fn draw(&self, n: usize, rng: &mut StreamRng) -> Result<Draw> {
        if n < 2 {
            return Err(Error::domain(format!(
                "sample size must be at least 2, got {n}"
            )));
        }
        let mut clamped = 0u64;
        let values = (0..n)
            .map(|_| {
                let x = self.base(rng) + self.shift;
                if self.bound.contains(x) {
                    x
                } else {
                    clamped += 1;
                    self.bound.clamp(x)
                }
            })
            .collect();
        Ok(Draw {
            sample: RawSample::new(values, self.bound)?,
            clamped,
        })
    }

    /// Mean after shift and clamping; exact for every kind except the
    /// truncated normal, where it is integrated numerically.
    pub fn mean(&self) -> f64 {
        let m = self.bound.get();
        let shifted = |x: f64| (x + self.shift).clamp(0.0, m);
        match &self.sampler {
            Sampler::Constant(c) => shifted(*c),
            Sampler::TwoPoint { p, lo, hi } => p * shifted(*hi) + (1.0 - p) * shifted(*lo),
            Sampler::Uniform { lo, hi } => {
                if hi == lo {
                    return shifted(*lo);
                }
                midpoint_integral(*lo, *hi, shifted) / (hi - lo)
            }
            Sampler::Rejection { normal, .. } => {
                truncated_normal_mean(normal.mean(), normal.std_dev(), m, shifted)
            }
            Sampler::Inversion { mu, sigma, .. } => truncated_normal_mean(*mu, *sigma, m, shifted),
            Sampler::Empirical(values) => {
                values.iter().map(|&x| shifted(x)).sum::<f64>() / values.len() as f64
            }
        }
    }
}

fn midpoint_integral(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const STEPS: usize = 20_000;
    let h = (hi - lo) / STEPS as f64;
    (0..STEPS)
        .map(|i| f(lo + (i as f64 + 0.5) * h))
        .sum::<f64>()
        * h
}

fn truncated_normal_mean(mu: f64, sigma: f64, m: f64, g: impl Fn(f64) -> f64) -> f64 {
    // scaled by the density at the point of [0, m] nearest mu to avoid underflow
    let z_ref = (mu.clamp(0.0, m) - mu) / sigma;
    let density = |x: f64| {
        let z = (x - mu) / sigma;
        (-0.5 * (z * z - z_ref * z_ref)).exp()
    };
    let mass = midpoint_integral(0.0, m, density);
    midpoint_integral(0.0, m, |x| g(x) * density(x)) / mass
}

/// Draw `n` counters from `spec` with the given generator.
pub fn draw_sample(spec: &PopulationSpec, n: usize, rng: &mut StreamRng) -> Result<Draw> {
    spec.prepare()?.draw(n, rng)
}
