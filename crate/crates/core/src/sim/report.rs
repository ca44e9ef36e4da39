use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

use super::experiment::{ExperimentPlan, TrialSummary};

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub n: usize,
    pub method: String,
    pub epsilon: Option<f64>,
    pub theta: f64,
    pub r: f64,
    pub rejection_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub failures: u64,
}

pub fn result_rows(plan: &ExperimentPlan, summaries: &[TrialSummary]) -> Vec<ResultRow> {
    summaries
        .iter()
        .map(|s| ResultRow {
            n: s.n,
            method: plan.method.label().to_string(),
            epsilon: plan.method.epsilon(),
            theta: plan.theta(),
            r: plan.method.ldp_fraction(),
            rejection_rate: s.rejection_rate.get(),
            ci_lo: s.wilson_ci_95.0,
            ci_hi: s.wilson_ci_95.1,
            failures: s.failures,
        })
        .collect()
}

/// Columns: n, method, epsilon, theta, r, rejection_rate, ci_lo, ci_hi,
/// failures. A missing epsilon is an empty field.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "n",
            "method",
            "epsilon",
            "theta",
            "r",
            "rejection_rate",
            "ci_lo",
            "ci_hi",
            "failures",
        ])
        .map_err(csv_err)?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}
