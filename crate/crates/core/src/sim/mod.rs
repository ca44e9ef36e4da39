//! Monte Carlo harness: synthetic populations, repeated trials of any test,
//! and aggregation into empirical rejection rates.
//!
//! Trials are independent. Trial `t` at grid index `i` draws from the
//! substream `(seed, i, t)`, so results are identical across runs and thread
//! counts, and dropping a trial never changes another.

mod experiment;
mod population;
mod presets;
mod report;

pub use experiment::{
    first_n_reaching, power_curve, run_experiment, run_trial, wilson_interval, with_threads,
    ExperimentPlan, MethodSpec, TrialOutcome, TrialSummary,
};
pub use population::{draw_sample, Draw, Population, PopulationKind, PopulationSpec};
pub use presets::{figure_preset, FIGURE_BOUND, FIGURE_THETAS};
pub use report::{result_rows, write_results_csv, ResultRow};
