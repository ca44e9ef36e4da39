// Normal and Student-t distribution functions.

use ldp_abtest::numerics::{normal_cdf, normal_quantile, student_t_cdf, DegreesOfFreedom};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for p in [0.025, 0.5, 0.95, 1e-8] {
        let z = normal_quantile(p)?;
        println!(
            "quantile({p}) = {z:.10}, round trip {:.3e}",
            normal_cdf(z).get()
        );
    }
    for df in [1.0, 2.0, 7.5, 1e6] {
        let df = DegreesOfFreedom::new(df)?;
        println!(
            "P[T_{} <= 1.96] = {:.8}",
            df.get(),
            student_t_cdf(1.96, df).get()
        );
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
