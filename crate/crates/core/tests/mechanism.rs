use ldp_abtest::mechanism::{
    privacy_ratio_bound, randomize, response_probability, Counter, DomainBound, LdpBit,
    OneBitMechanism, PrivacyBudget, RandomSource, StreamRng,
};
use ldp_abtest::power::transformed_mean;
use ldp_abtest::sim::{draw_sample, PopulationKind, PopulationSpec};
use proptest::prelude::*;
use rand::Rng;

fn eps(v: f64) -> PrivacyBudget {
    PrivacyBudget::new(v).unwrap()
}

fn bound(v: f64) -> DomainBound {
    DomainBound::new(v).unwrap()
}

fn ones_fraction(mech: &OneBitMechanism, xs: &[f64], seed: u64) -> f64 {
    let bits = mech.randomize_all(xs, &mut StreamRng::new(seed)).unwrap();
    bits.iter().filter(|b| b.is_one()).count() as f64 / bits.len() as f64
}

#[test]
fn reference_probabilities() {
    let ln3 = eps(3f64.ln());
    let m = bound(10.0);
    let p = |x| {
        response_probability(Counter::new(x, m).unwrap(), ln3)
            .unwrap()
            .get()
    };
    assert!((p(0.0) - 0.25).abs() < 1e-15);
    assert!((p(10.0) - 0.75).abs() < 1e-15);
    for e in [0.1, 1.0, 7.0] {
        let mid = OneBitMechanism::new(eps(e), m)
            .response_probability(5.0)
            .unwrap()
            .get();
        assert!((mid - 0.5).abs() < 1e-15);
    }
}

#[test]
fn ratio_bound_reference() {
    assert!((privacy_ratio_bound(eps(3f64.ln()), bound(1.0)) - 3.0).abs() < 1e-12);
    assert!((privacy_ratio_bound(eps(1.0), bound(7.0)) - std::f64::consts::E).abs() < 1e-12);
    assert!((privacy_ratio_bound(eps(0.5), bound(0.3)) - 1.648_721_270_700_128).abs() < 1e-12);
}

#[test]
fn random_pairs_respect_the_privacy_ratio() {
    let mut rng = StreamRng::new(99);
    for _ in 0..1000 {
        let e = eps(rng.gen_range(0.01..8.0));
        let m = bound(rng.gen_range(0.1..1e5));
        let mech = OneBitMechanism::new(e, m);
        let x = rng.gen_range(0.0..=m.get());
        let y = rng.gen_range(0.0..=m.get());
        let px = mech.response_probability(x).unwrap().get();
        let py = mech.response_probability(y).unwrap().get();
        let limit = e.get().exp() + 1e-12;
        assert!(px / py <= limit);
        assert!((1.0 - px) / (1.0 - py) <= limit);
    }
}

#[test]
fn out_of_range_counters_rejected() {
    let mech = OneBitMechanism::new(eps(1.0), bound(10.0));
    let mut rng = StreamRng::new(0);
    assert!(mech.randomize(-0.1, &mut rng).is_err());
    assert!(mech.randomize(10.01, &mut rng).is_err());
    assert!(mech.randomize(f64::NAN, &mut rng).is_err());
    assert!(Counter::new(11.0, bound(10.0)).is_err());
    assert_eq!(Counter::clamped(11.0, bound(10.0)).value(), 10.0);
}

struct Fixed(f64);

impl RandomSource for Fixed {
    fn next_uniform(&mut self) -> f64 {
        self.0
    }
}

#[test]
fn threshold_rule() {
    let x = Counter::new(0.0, bound(10.0)).unwrap();
    assert_eq!(
        randomize(x, eps(3f64.ln()), &mut Fixed(0.9)).unwrap(),
        LdpBit::Zero
    );
    assert_eq!(
        randomize(x, eps(3f64.ln()), &mut Fixed(0.2)).unwrap(),
        LdpBit::One
    );
}

#[test]
fn one_variate_per_bit() {
    struct Counting(u64, StreamRng);
    impl RandomSource for Counting {
        fn next_uniform(&mut self) -> f64 {
            self.0 += 1;
            self.1.next_uniform()
        }
    }
    let mech = OneBitMechanism::new(eps(1.0), bound(1.0));
    let mut src = Counting(0, StreamRng::new(1));
    mech.randomize_all(&[0.2; 37], &mut src).unwrap();
    assert_eq!(src.0, 37);
}

#[test]
fn empirical_frequencies() {
    let m = bound(8.0);
    let half = ones_fraction(&OneBitMechanism::new(eps(1.0), m), &[4.0; 100_000], 5);
    assert!((half - 0.5).abs() <= 0.005, "{half}");
    let low = ones_fraction(&OneBitMechanism::new(eps(1.0), m), &[0.0; 100_000], 6);
    let expected = 1.0 / (1f64.exp() + 1.0);
    assert!((low - expected).abs() <= 0.005, "{low} vs {expected}");
}

#[test]
fn determinism() {
    let mech = OneBitMechanism::new(eps(0.7), bound(3.0));
    let xs: Vec<f64> = (0..500).map(|i| (i % 4) as f64 * 0.75).collect();
    let a = mech.randomize_all(&xs, &mut StreamRng::new(2024)).unwrap();
    let b = mech.randomize_all(&xs, &mut StreamRng::new(2024)).unwrap();
    let c = mech.randomize_all(&xs, &mut StreamRng::new(2025)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn substreams_are_addressed_not_sequenced() {
    let draw = |a, b| {
        let mut r = StreamRng::substream(7, a, b);
        (0..8).map(|_| r.next_uniform()).collect::<Vec<_>>()
    };
    assert_eq!(draw(3, 4), draw(3, 4));
    assert_ne!(draw(3, 4), draw(4, 3));
    assert_ne!(draw(0, 1), draw(1, 0));
    assert_ne!(draw(0, 0), draw(0, 1));
}

#[test]
fn bit_frequency_matches_transformed_mean() {
    let m = bound(20.0);
    let e = eps(1.3);
    let mech = OneBitMechanism::new(e, m);
    let populations = [
        PopulationKind::PointMass { value: 6.0 },
        PopulationKind::TwoPoint {
            p: 0.3,
            lo: 2.0,
            hi: 18.0,
        },
        PopulationKind::Uniform { lo: 0.0, hi: 20.0 },
    ];
    for (i, kind) in populations.into_iter().enumerate() {
        let spec = PopulationSpec::new(kind, m);
        let mu = spec.prepare().unwrap().mean();
        let n = 100_000;
        let mut rng = StreamRng::substream(17, i as u64, 0);
        let sample = draw_sample(&spec, n, &mut rng).unwrap().sample;
        let bits = mech.randomize_all(sample.values(), &mut rng).unwrap();
        let freq = bits.iter().filter(|b| b.is_one()).count() as f64 / n as f64;
        let p = transformed_mean(mu, e, m).unwrap().get();
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (freq - p).abs() <= 3.0 * sigma,
            "population {i}: {freq} vs {p}"
        );
    }
}

#[test]
fn one_bit_cannot_tell_spread_from_point_mass() {
    // point mass at m/2 against a fair coin on {0, m}: same bit law, very
    // different variances
    let m = bound(100.0);
    let mech = OneBitMechanism::new(eps(2.0), m);
    let n = 100_000;
    let mut rng = StreamRng::new(31);
    let point = draw_sample(
        &PopulationSpec::new(PopulationKind::PointMass { value: 50.0 }, m),
        n,
        &mut rng,
    )
    .unwrap()
    .sample;
    let spread = draw_sample(
        &PopulationSpec::new(
            PopulationKind::TwoPoint {
                p: 0.5,
                lo: 0.0,
                hi: 100.0,
            },
            m,
        ),
        n,
        &mut rng,
    )
    .unwrap()
    .sample;
    let f = |xs: &[f64], rng: &mut StreamRng| {
        let b = mech.randomize_all(xs, rng).unwrap();
        b.iter().filter(|b| b.is_one()).count() as f64 / b.len() as f64
    };
    let dp = (f(point.values(), &mut rng) - f(spread.values(), &mut rng)).abs();
    assert!(dp <= 0.01, "{dp}");
    assert!(spread.variance() - point.variance() >= 100.0 * 100.0 / 5.0);
}

proptest! {
    #[test]
    fn probability_within_endpoints(e in 0.01f64..10.0, m in 0.1f64..1e4, t in 0.0f64..=1.0) {
        let mech = OneBitMechanism::new(eps(e), bound(m));
        let (lo, hi) = mech.endpoint_probabilities();
        let p = mech.response_probability(t * m).unwrap().get();
        prop_assert!(p >= lo - 1e-15 && p <= hi + 1e-15);
    }

    #[test]
    fn strictly_increasing_in_x(e in 0.01f64..10.0, m in 0.1f64..1e4, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        prop_assume!((a - b).abs() > 1e-6);
        let mech = OneBitMechanism::new(eps(e), bound(m));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(mech.response_probability(lo * m).unwrap() < mech.response_probability(hi * m).unwrap());
    }

    #[test]
    fn epsilon_pushes_away_from_half(e in 0.01f64..5.0, de in 0.01f64..2.0, t in 0.0f64..=1.0) {
        prop_assume!((t - 0.5).abs() > 1e-3);
        let m = bound(1.0);
        let p1 = OneBitMechanism::new(eps(e), m).response_probability(t).unwrap().get();
        let p2 = OneBitMechanism::new(eps(e + de), m).response_probability(t).unwrap().get();
        if t > 0.5 { prop_assert!(p2 > p1) } else { prop_assert!(p2 < p1) }
    }

    #[test]
    fn ratio_bound_is_exp_eps(e in 0.01f64..20.0, m in 1e-3f64..1e6) {
        let r = privacy_ratio_bound(eps(e), bound(m));
        prop_assert!((r / e.exp() - 1.0).abs() < 1e-12);
    }
}
