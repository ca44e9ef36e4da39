// The distribution-free one-sided rule on bit counts.

use ldp_abtest::hypothesis::{
    bin_test_mcdiarmid, mcdiarmid_threshold, BinarySampleSummary, Hypothesis, Tail,
};
use ldp_abtest::mechanism::{DomainBound, PrivacyBudget};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let h = Hypothesis::new(0.0, Tail::Greater, 0.05)?;
    let a = BinarySampleSummary::new(5_600, 10_000)?;
    let b = BinarySampleSummary::new(5_000, 10_000)?;
    let z0 = mcdiarmid_threshold(a.n(), b.n(), h.alpha);
    let r = bin_test_mcdiarmid(a, b, &h, PrivacyBudget::new(1.0)?, DomainBound::new(1.0)?)?;
    println!(
        "z = {:.4}, threshold {z0:.4}, bound on p {:.2e}, reject = {}",
        r.statistic,
        r.p_value.get(),
        r.reject
    );
    assert!(r.reject);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
