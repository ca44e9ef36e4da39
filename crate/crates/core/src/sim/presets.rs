use crate::error::{Error, Result};
use crate::hypothesis::Tail;
use crate::mechanism::{DomainBound, PrivacyBudget};
use crate::numerics::Probability;

use super::experiment::{ExperimentPlan, MethodSpec};
use super::population::{PopulationKind, PopulationSpec};

pub const FIGURE_BOUND: f64 = 15000.0;
pub const FIGURE_THETAS: [f64; 4] = [60.0, 120.0, 300.0, 600.0];

const TRIALS: u64 = 1000;

fn base_population() -> PopulationSpec {
    PopulationSpec::new(
        PopulationKind::TruncatedNormal {
            mu: 4500.0,
            sigma: 3000.0,
        },
        DomainBound::new(FIGURE_BOUND).expect("positive bound"),
    )
}

fn eps(v: f64) -> PrivacyBudget {
    PrivacyBudget::new(v).expect("positive budget")
}

fn plan(
    method: MethodSpec,
    theta: f64,
    tail: Tail,
    n_grid: Vec<usize>,
    seed: u64,
) -> ExperimentPlan {
    ExperimentPlan {
        control: base_population(),
        treatment: base_population().with_shift(theta),
        method,
        d0: 0.0,
        tail,
        n_grid,
        trials: TRIALS,
        seed,
        alpha: Probability::open(0.05).expect("alpha in (0, 1)"),
    }
}

fn power_grid() -> Vec<usize> {
    vec![
        1_000, 2_000, 5_000, 10_000, 20_000, 50_000, 100_000, 200_000, 500_000, 1_000_000,
    ]
}

/// Reproduction configs on the synthetic `m = 15000` population.
///
/// * 1: type-I error against `n` for every test under identical groups.
/// * 2: power against `n` of the transformation-based test for each gap in
///   [`FIGURE_THETAS`], with the non-private test as a baseline.
/// * 3: power against `n` of the hybrid test for `r` in {0, 0.01, 0.5, 1}.
pub fn figure_preset(figure: u8) -> Result<Vec<ExperimentPlan>> {
    let plans = match figure {
        1 => {
            let grid = vec![500, 1_000, 2_000, 5_000, 10_000];
            let methods = [
                MethodSpec::Welch,
                MethodSpec::Bin { epsilon: eps(0.5) },
                MethodSpec::Bin { epsilon: eps(1.0) },
                MethodSpec::Bin { epsilon: eps(3.0) },
                MethodSpec::Mix {
                    epsilon: eps(1.0),
                    ldp_fraction: 0.5,
                },
                MethodSpec::Est {
                    epsilon1: eps(2.5),
                    epsilon2: eps(2.5),
                    variance_floor: None,
                },
            ];
            methods
                .into_iter()
                .enumerate()
                .map(|(i, m)| plan(m, 0.0, Tail::TwoSided, grid.clone(), 1000 + i as u64))
                .collect()
        }
        2 => FIGURE_THETAS
            .iter()
            .enumerate()
            .flat_map(|(i, &theta)| {
                [
                    plan(
                        MethodSpec::Bin { epsilon: eps(1.0) },
                        theta,
                        Tail::Greater,
                        power_grid(),
                        2000 + 2 * i as u64,
                    ),
                    plan(
                        MethodSpec::Welch,
                        theta,
                        Tail::Greater,
                        power_grid(),
                        2001 + 2 * i as u64,
                    ),
                ]
            })
            .collect(),
        3 => [0.0, 0.01, 0.5, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                plan(
                    MethodSpec::Mix {
                        epsilon: eps(1.0),
                        ldp_fraction: r,
                    },
                    60.0,
                    Tail::Greater,
                    power_grid(),
                    3000 + i as u64,
                )
            })
            .collect(),
        other => {
            return Err(Error::domain(format!(
                "unknown figure {other}, expected 1, 2 or 3"
            )))
        }
    };
    Ok(plans)
}
