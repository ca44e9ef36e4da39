// Smallest grid size at which the empirical power reaches 0.8.

use ldp_abtest::hypothesis::Tail;
use ldp_abtest::mechanism::{DomainBound, PrivacyBudget};
use ldp_abtest::numerics::Probability;
use ldp_abtest::power::{sample_size, EffectSpec};
use ldp_abtest::sim::{power_curve, ExperimentPlan, MethodSpec, PopulationKind, PopulationSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let m = DomainBound::new(1.0)?;
    let eps = PrivacyBudget::new(1.0)?;
    let planned = sample_size(&EffectSpec::new(0.2, eps, m)?, 0.05, 0.2)? as usize;
    let plan = ExperimentPlan {
        control: PopulationSpec::new(PopulationKind::PointMass { value: 0.4 }, m),
        treatment: PopulationSpec::new(PopulationKind::PointMass { value: 0.4 }, m).with_shift(0.2),
        method: MethodSpec::Bin { epsilon: eps },
        d0: 0.0,
        tail: Tail::Greater,
        n_grid: vec![planned / 4, planned / 2, planned, 2 * planned],
        trials: 200,
        seed: 1,
        alpha: Probability::open(0.05)?,
    };
    let reached = power_curve(&plan, Probability::new(0.8)?)?;
    println!("planned n = {planned}, first grid size with power >= 0.8: {reached:?}");
    Ok(())
}

fn main() {
    run_example().unwrap();
}
