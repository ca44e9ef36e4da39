// Per-group sample size for 80% power, and the power bounds at that size.

use ldp_abtest::mechanism::{DomainBound, PrivacyBudget};
use ldp_abtest::power::{
    hybrid_variance, power_report, sample_size, EffectSpec, HybridVarianceSpec,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let effect = EffectSpec::new(0.1, PrivacyBudget::new(1.0)?, DomainBound::new(1.0)?)?;
    let n = sample_size(&effect, 0.05, 0.2)?;
    println!("p_theta = {:.6}, n per group = {n}", effect.p_theta());
    assert_eq!(n, 1449);

    let report = power_report(&effect, n, n, 0.05, None)?;
    println!("normal bound {:.4}", report.bound_normal_sizes.get());
    match report.bound_mcdiarmid {
        Some(p) => println!("bounded-differences bound {:.4}", p.get()),
        None => println!("bounded-differences bound not applicable at this size"),
    }

    for eps in [0.5, 1.0, 3.0] {
        let e = EffectSpec::new(60.0, PrivacyBudget::new(eps)?, DomainBound::new(15000.0)?)?;
        println!(
            "theta/m = 0.004, eps = {eps}: n = {}",
            sample_size(&e, 0.05, 0.2)?
        );
    }

    for r in [0.0, 0.5, 1.0] {
        let v = hybrid_variance(&HybridVarianceSpec {
            sigma2: 0.07,
            mu: 0.5,
            r,
            eps: PrivacyBudget::new(3f64.ln())?,
            bound: DomainBound::new(1.0)?,
        })?;
        println!("hybrid variance at r = {r}: {v:.3}");
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
