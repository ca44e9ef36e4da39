// Run the exact, estimation-based and transformation-based tests on the same
// pair of groups.

use ldp_abtest::estimators::BudgetSplit;
use ldp_abtest::hypothesis::{bin_test, est_test, welch_t, Hypothesis, RawSample};
use ldp_abtest::mechanism::{DomainBound, PrivacyBudget, StreamRng};
use rand::Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let m = DomainBound::new(1.0)?;
    let mut rng = StreamRng::new(3);
    let a: Vec<f64> = (0..20_000)
        .map(|_| (rng.gen::<f64>() < 0.55) as u8 as f64)
        .collect();
    let b: Vec<f64> = (0..20_000)
        .map(|_| (rng.gen::<f64>() < 0.45) as u8 as f64)
        .collect();
    let a = RawSample::new(a, m)?;
    let b = RawSample::new(b, m)?;
    let h = Hypothesis::equal_means(0.05)?;
    let eps = PrivacyBudget::new(1.0)?;

    let exact = welch_t(&a, &b, &h)?;
    let est = est_test(&a, &b, BudgetSplit::even(eps), &h, &mut rng)?;
    let bin = bin_test(&a, &b, eps, &h, &mut rng)?;
    for r in [exact, est, bin] {
        println!(
            "{:>6}: t = {:>8.3}  p = {:.2e}  reject = {}",
            r.method,
            r.statistic,
            r.p_value.get(),
            r.reject
        );
    }
    assert!(exact.reject && bin.reject);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
