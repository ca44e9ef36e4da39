// Empirical type-I error of the transformation-based test on identical
// synthetic populations.

use ldp_abtest::hypothesis::Tail;
use ldp_abtest::mechanism::{DomainBound, PrivacyBudget};
use ldp_abtest::numerics::Probability;
use ldp_abtest::sim::{
    result_rows, run_experiment, write_results_csv, ExperimentPlan, MethodSpec, PopulationKind,
    PopulationSpec,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let pop = PopulationSpec::new(
        PopulationKind::TruncatedNormal {
            mu: 7500.0,
            sigma: 1500.0,
        },
        DomainBound::new(15000.0)?,
    );
    let plan = ExperimentPlan {
        control: pop.clone(),
        treatment: pop,
        method: MethodSpec::Bin {
            epsilon: PrivacyBudget::new(1.0)?,
        },
        d0: 0.0,
        tail: Tail::TwoSided,
        n_grid: vec![200, 1000],
        trials: 200,
        seed: 42,
        alpha: Probability::open(0.05)?,
    };
    let summaries = run_experiment(&plan)?;
    write_results_csv(&result_rows(&plan, &summaries), std::io::stdout())?;
    for s in &summaries {
        assert!(s.rejection_rate.get() < 0.15);
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
