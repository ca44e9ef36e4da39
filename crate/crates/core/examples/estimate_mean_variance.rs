// Estimate a population's mean and variance from two private bits per user.

use ldp_abtest::estimators::{
    clamp_mean, clamp_variance, collect_two_bit_all, estimate_mean, estimate_variance, BudgetSplit,
};
use ldp_abtest::mechanism::{DomainBound, PrivacyBudget, StreamRng};
use rand::Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let m = DomainBound::new(10.0)?;
    let mut rng = StreamRng::new(11);
    let xs: Vec<f64> = (0..50_000).map(|_| rng.gen_range(0.0..10.0)).collect();

    let split = BudgetSplit::even(PrivacyBudget::new(5.0)?);
    let (first, second) = collect_two_bit_all(&xs, m, split, &mut rng)?;
    let mean = estimate_mean(&first)?;
    let var = estimate_variance(&first, &second)?;

    println!(
        "true mean 5.000, estimate {mean:.3} (clamped {:.3})",
        clamp_mean(mean, m)
    );
    println!(
        "true variance 8.333, estimate {var:.3} (clamped {:.3})",
        clamp_variance(var)
    );
    assert!((mean - 5.0).abs() < 0.5);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
