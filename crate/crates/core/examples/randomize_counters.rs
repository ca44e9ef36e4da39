// Privatize counters with the one-bit mechanism and check the response
// probabilities.

use ldp_abtest::mechanism::{
    privacy_ratio_bound, DomainBound, OneBitMechanism, PrivacyBudget, StreamRng,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let eps = PrivacyBudget::new(1.0)?;
    let m = DomainBound::new(100.0)?;
    let mech = OneBitMechanism::new(eps, m);

    let counters = [0.0, 12.0, 50.0, 87.5, 100.0];
    let mut rng = StreamRng::new(7);
    let bits = mech.randomize_all(&counters, &mut rng)?;
    for (x, b) in counters.iter().zip(&bits) {
        let p = mech.response_probability(*x)?.get();
        println!("x = {x:>6}  P[1] = {p:.4}  bit = {}", b.as_u8());
    }

    let (lo, hi) = mech.endpoint_probabilities();
    println!("P[1] ranges over [{lo:.4}, {hi:.4}]");
    let ratio = privacy_ratio_bound(eps, m);
    println!(
        "worst likelihood ratio {ratio:.4} <= e^eps = {:.4}",
        eps.get().exp()
    );
    assert!(ratio <= eps.get().exp() * (1.0 + 1e-12));
    Ok(())
}

fn main() {
    run_example().unwrap();
}
