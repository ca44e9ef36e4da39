// Hybrid test: half of the users send a rescaled private bit, the rest send
// their exact counter.

use ldp_abtest::hypothesis::{mix_sample, mix_test, Hypothesis, Provenance, RawSample, Tail};
use ldp_abtest::mechanism::{DomainBound, PrivacyBudget, StreamRng};
use rand::Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let m = DomainBound::new(100.0)?;
    let eps = PrivacyBudget::new(1.0)?;
    let mut rng = StreamRng::new(5);
    let a: Vec<f64> = (0..5_000).map(|_| rng.gen_range(20.0..80.0)).collect();
    let b: Vec<f64> = (0..5_000).map(|_| rng.gen_range(10.0..70.0)).collect();
    let flags = |n: usize| (0..n).map(|i| i % 2 == 0).collect::<Vec<_>>();

    let preview = mix_sample(&a[..4], &[Some(eps), None, Some(eps), None], m, &mut rng)?;
    for v in &preview {
        let tag = match v.provenance {
            Provenance::Exact => "exact",
            Provenance::RescaledBit => "rescaled bit",
        };
        println!("{:>9.3} ({tag})", v.value);
    }

    let h = Hypothesis::new(0.0, Tail::Greater, 0.05)?;
    let r = mix_test(
        &RawSample::new(a, m)?,
        &flags(5_000),
        &RawSample::new(b, m)?,
        &flags(5_000),
        eps,
        &h,
        &mut rng,
    )?;
    println!(
        "t = {:.3}, p = {:.2e}, reject = {}",
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
