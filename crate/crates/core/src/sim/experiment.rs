use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::BudgetSplit;
use crate::hypothesis::{
    bin_test, est_test, est_test_with_floor, mcdiarmid_on_samples, mix_test, welch_t, Hypothesis,
    Tail, TestResult,
};
use crate::mechanism::{PrivacyBudget, StreamRng};
use crate::numerics::Probability;

use super::population::{Population, PopulationSpec};

/// The test applied in every trial, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum MethodSpec {
    Welch,
    Est {
        epsilon1: PrivacyBudget,
        epsilon2: PrivacyBudget,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variance_floor: Option<f64>,
    },
    Bin {
        epsilon: PrivacyBudget,
    },
    Mcdiarmid {
        epsilon: PrivacyBudget,
    },
    Mix {
        epsilon: PrivacyBudget,
        /// Fraction `r` of users in each group who send a private bit.
        ldp_fraction: f64,
    },
}

impl MethodSpec {
    pub fn label(&self) -> &'static str {
        match self {
            MethodSpec::Welch => "welch",
            MethodSpec::Est { .. } => "est",
            MethodSpec::Bin { .. } => "bin",
            MethodSpec::Mcdiarmid { .. } => "mcdiarmid",
            MethodSpec::Mix { .. } => "mix",
        }
    }

    /// Total privacy budget per user, absent for the non-private test.
    pub fn epsilon(&self) -> Option<f64> {
        match self {
            MethodSpec::Welch => None,
            MethodSpec::Est {
                epsilon1, epsilon2, ..
            } => Some(epsilon1.get() + epsilon2.get()),
            MethodSpec::Bin { epsilon }
            | MethodSpec::Mcdiarmid { epsilon }
            | MethodSpec::Mix { epsilon, .. } => Some(epsilon.get()),
        }
    }

    /// Fraction of users under local privacy.
    pub fn ldp_fraction(&self) -> f64 {
        match self {
            MethodSpec::Welch => 0.0,
            MethodSpec::Mix { ldp_fraction, .. } => *ldp_fraction,
            _ => 1.0,
        }
    }
}

fn default_tail() -> Tail {
    Tail::TwoSided
}

/// A Monte Carlo experiment. Group A is drawn from `treatment` and group B
/// from `control`, so a positive treatment shift means `mu_A - mu_B > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub control: PopulationSpec,
    pub treatment: PopulationSpec,
    pub method: MethodSpec,
    #[serde(default)]
    pub d0: f64,
    #[serde(default = "default_tail")]
    pub tail: Tail,
    /// Per-group sample sizes, strictly increasing.
    pub n_grid: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub alpha: Probability,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if self.n_grid.is_empty() {
            return Err(Error::domain("n_grid must not be empty"));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::domain("every sample size must be at least 2"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("n_grid must be strictly increasing"));
        }
        if self.control.bound != self.treatment.bound {
            return Err(Error::domain(
                "control and treatment must share the domain bound",
            ));
        }
        self.hypothesis()?;
        match self.method {
            MethodSpec::Mcdiarmid { .. } if self.tail == Tail::TwoSided => {
                return Err(Error::Unsupported(
                    "the McDiarmid rule is one-sided; use tail greater or less".into(),
                ))
            }
            MethodSpec::Mix { ldp_fraction, .. } if !(0.0..=1.0).contains(&ldp_fraction) => {
                return Err(Error::domain(format!(
                    "ldp_fraction must lie in [0, 1], got {ldp_fraction}"
                )))
            }
            MethodSpec::Est {
                variance_floor: Some(f),
                ..
            } if !(f >= 0.0 && f.is_finite()) => {
                return Err(Error::domain(format!(
                    "variance_floor must be >= 0, got {f}"
                )))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn hypothesis(&self) -> Result<Hypothesis> {
        Hypothesis::new(self.d0, self.tail, self.alpha.get())
    }

    /// Nominal mean gap: treatment shift minus control shift.
    pub fn theta(&self) -> f64 {
        self.treatment.shift - self.control.shift
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Reject,
    Accept,
    /// The test statistic was undefined on the drawn data.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TrialRecord {
    outcome: TrialOutcome,
    clamped: u64,
    runtime_ms: f64,
}

struct Prepared<'a> {
    plan: &'a ExperimentPlan,
    control: Population,
    treatment: Population,
    h: Hypothesis,
}

impl<'a> Prepared<'a> {
    fn new(plan: &'a ExperimentPlan) -> Result<Self> {
        plan.validate()?;
        Ok(Prepared {
            plan,
            control: plan.control.prepare()?,
            treatment: plan.treatment.prepare()?,
            h: plan.hypothesis()?,
        })
    }

    fn trial(&self, n_idx: usize, trial_idx: u64) -> Result<TrialRecord> {
        let start = Instant::now();
        let n = self.plan.n_grid[n_idx];
        let mut rng = StreamRng::substream(self.plan.seed, n_idx as u64, trial_idx);
        let a = self.treatment.draw(n, &mut rng)?;
        let b = self.control.draw(n, &mut rng)?;
        let result = apply(&self.plan.method, &a.sample, &b.sample, &self.h, &mut rng);
        let outcome = match result {
            Ok(r) if r.reject => TrialOutcome::Reject,
            Ok(_) => TrialOutcome::Accept,
            Err(Error::Degenerate(_)) => TrialOutcome::Failed,
            Err(e) => return Err(e),
        };
        Ok(TrialRecord {
            outcome,
            clamped: a.clamped + b.clamped,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }
}

fn apply(
    method: &MethodSpec,
    a: &crate::hypothesis::RawSample,
    b: &crate::hypothesis::RawSample,
    h: &Hypothesis,
    rng: &mut StreamRng,
) -> Result<TestResult> {
    match *method {
        MethodSpec::Welch => welch_t(a, b, h),
        MethodSpec::Est {
            epsilon1,
            epsilon2,
            variance_floor,
        } => {
            let split = BudgetSplit::new(epsilon1, epsilon2);
            match variance_floor {
                Some(f) => est_test_with_floor(a, b, split, h, f, rng),
                None => est_test(a, b, split, h, rng),
            }
        }
        MethodSpec::Bin { epsilon } => bin_test(a, b, epsilon, h, rng),
        MethodSpec::Mcdiarmid { epsilon } => mcdiarmid_on_samples(a, b, epsilon, h, rng),
        MethodSpec::Mix {
            epsilon,
            ldp_fraction,
        } => {
            let flags = |n: usize| {
                let k = (ldp_fraction * n as f64).round() as usize;
                (0..n).map(|i| i < k).collect::<Vec<_>>()
            };
            mix_test(a, &flags(a.len()), b, &flags(b.len()), epsilon, h, rng)
        }
    }
}

/// Outcome of a single trial. The trial's generator is the substream
/// `(seed, n_idx, trial_idx)`, so the result does not depend on any other
/// trial.
pub fn run_trial(plan: &ExperimentPlan, n_idx: usize, trial_idx: u64) -> Result<TrialOutcome> {
    if n_idx >= plan.n_grid.len() {
        return Err(Error::domain(format!(
            "n index {n_idx} out of range for a grid of {}",
            plan.n_grid.len()
        )));
    }
    Ok(Prepared::new(plan)?.trial(n_idx, trial_idx)?.outcome)
}

/// Aggregated outcome at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub n: usize,
    pub trials_completed: u64,
    pub rejections: u64,
    /// Trials whose statistic was undefined; excluded from the rate.
    pub failures: u64,
    /// Draws pushed back into `[0, m]` after the shift.
    pub clamped_values: u64,
    pub rejection_rate: Probability,
    pub wilson_ci_95: (f64, f64),
    /// Wall-clock time; the only field that varies between identical runs.
    pub mean_runtime_ms: f64,
}

impl TrialSummary {
    /// Every field except the wall-clock runtime.
    pub fn same_outcome(&self, other: &TrialSummary) -> bool {
        self.n == other.n
            && self.trials_completed == other.trials_completed
            && self.rejections == other.rejections
            && self.failures == other.failures
            && self.clamped_values == other.clamped_values
            && self.rejection_rate == other.rejection_rate
            && self.wilson_ci_95.0.to_bits() == other.wilson_ci_95.0.to_bits()
            && self.wilson_ci_95.1.to_bits() == other.wilson_ci_95.1.to_bits()
    }

    /// Monte Carlo standard error of the rejection rate.
    pub fn standard_error(&self) -> f64 {
        if self.trials_completed == 0 {
            return f64::NAN;
        }
        let p = self.rejection_rate.get();
        (p * (1.0 - p) / self.trials_completed as f64).sqrt()
    }
}

const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

fn summarize(n: usize, records: &[TrialRecord]) -> TrialSummary {
    let mut rejections = 0;
    let mut failures = 0;
    let mut clamped = 0;
    let mut runtime = 0.0;
    for r in records {
        match r.outcome {
            TrialOutcome::Reject => rejections += 1,
            TrialOutcome::Accept => {}
            TrialOutcome::Failed => failures += 1,
        }
        clamped += r.clamped;
        runtime += r.runtime_ms;
    }
    let completed = records.len() as u64 - failures;
    let rate = if completed == 0 {
        0.0
    } else {
        rejections as f64 / completed as f64
    };
    TrialSummary {
        n,
        trials_completed: completed,
        rejections,
        failures,
        clamped_values: clamped,
        rejection_rate: Probability::clamped(rate),
        wilson_ci_95: wilson_interval(rejections, completed),
        mean_runtime_ms: runtime / records.len().max(1) as f64,
    }
}

/// Run every trial at every grid size on the current rayon pool.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<TrialSummary>> {
    let prepared = Prepared::new(plan)?;
    let mut out = Vec::with_capacity(plan.n_grid.len());
    for (n_idx, &n) in plan.n_grid.iter().enumerate() {
        log::debug!("n = {n}: {} trials", plan.trials);
        let records = (0..plan.trials)
            .into_par_iter()
            .map(|t| prepared.trial(n_idx, t))
            .collect::<Result<Vec<_>>>()?;
        out.push(summarize(n, &records));
    }
    Ok(out)
}

/// Run `f` on a dedicated pool of `threads` workers; 0 picks the default.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(pool.install(f))
}

/// Smallest grid size whose rejection rate reaches `target`.
pub fn first_n_reaching(summaries: &[TrialSummary], target: Probability) -> Option<usize> {
    summaries
        .iter()
        .find(|s| s.rejection_rate >= target)
        .map(|s| s.n)
}

pub fn power_curve(plan: &ExperimentPlan, target: Probability) -> Result<Option<usize>> {
    Ok(first_n_reaching(&run_experiment(plan)?, target))
}
