//! End-to-end acceptance checks. Runs every criterion, prints one PASS/FAIL
//! line each and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ldp_abtest::estimators::{
    collect_two_bit_all, estimate_mean, estimate_variance, BitSample, BudgetSplit,
};
use ldp_abtest::hypothesis::{bin_test, mix_test, welch_t, Hypothesis, RawSample, Tail};
use ldp_abtest::mechanism::{DomainBound, OneBitMechanism, PrivacyBudget, StreamRng};
use ldp_abtest::numerics::{
    normal_cdf, normal_quantile, student_t_cdf, DegreesOfFreedom, Probability,
};
use ldp_abtest::power::{power_bound_mcdiarmid, power_bound_normal_sizes, sample_size, EffectSpec};
use ldp_abtest::sim::{
    draw_sample, run_experiment, ExperimentPlan, MethodSpec, PopulationKind, PopulationSpec,
    TrialSummary,
};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

fn eps(v: f64) -> PrivacyBudget {
    PrivacyBudget::new(v).unwrap()
}

fn bound(v: f64) -> DomainBound {
    DomainBound::new(v).unwrap()
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn plan(
    pop: &PopulationSpec,
    shift: f64,
    method: MethodSpec,
    tail: Tail,
    n: usize,
    seed: u64,
) -> ExperimentPlan {
    ExperimentPlan {
        control: pop.clone(),
        treatment: pop.clone().with_shift(shift),
        method,
        d0: 0.0,
        tail,
        n_grid: vec![n],
        trials: 1000,
        seed,
        alpha: Probability::open(0.05).unwrap(),
    }
}

fn run(p: &ExperimentPlan) -> TrialSummary {
    run_experiment(p).unwrap()[0]
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn wide_population() -> PopulationSpec {
    PopulationSpec::new(
        PopulationKind::TruncatedNormal {
            mu: 4500.0,
            sigma: 3000.0,
        },
        bound(15000.0),
    )
}

fn null_grid(method: impl Fn(f64) -> MethodSpec, seed: u64) -> Check {
    let pop = wide_population();
    let mut worst: f64 = 0.0;
    for (i, e) in [0.5, 1.0, 3.0].into_iter().enumerate() {
        for (j, n) in [500, 5000].into_iter().enumerate() {
            let s = run(&plan(
                &pop,
                0.0,
                method(e),
                Tail::TwoSided,
                n,
                seed + 10 * i as u64 + j as u64,
            ));
            let r = s.rejection_rate.get();
            ensure(r <= 0.071, format!("eps {e} n {n}: type-I {r:.3} > 0.071"))?;
            worst = worst.max(r);
        }
    }
    Ok(format!("max type-I {worst:.3}"))
}

fn significance_bin() -> Check {
    null_grid(|e| MethodSpec::Bin { epsilon: eps(e) }, 100)
}

fn significance_mix() -> Check {
    null_grid(
        |e| MethodSpec::Mix {
            epsilon: eps(e),
            ldp_fraction: 0.5,
        },
        200,
    )
}

fn est_violation() -> Check {
    let method = MethodSpec::Est {
        epsilon1: eps(2.5),
        epsilon2: eps(2.5),
        variance_floor: None,
    };
    let s = run(&plan(
        &wide_population(),
        0.0,
        method,
        Tail::TwoSided,
        10_000,
        300,
    ));
    let r = s.rejection_rate.get();
    ensure(r > 0.10, format!("type-I {r:.3} not above 0.10"))?;
    Ok(format!("type-I {r:.3}"))
}

fn sample_size_safety() -> Check {
    let m = 15000.0;
    let mut report = Vec::new();
    for (k, (ratio, e)) in [(0.004, 1.0), (0.02, 1.0), (0.004, 3.0)]
        .into_iter()
        .enumerate()
    {
        let theta = ratio * m;
        let n = sample_size(
            &EffectSpec::new(theta, eps(e), bound(m)).unwrap(),
            0.05,
            0.2,
        )
        .unwrap() as usize;
        // power of the bit test depends on the population only through its
        // mean, so point masses keep the largest cell affordable
        let pop = PopulationSpec::new(PopulationKind::PointMass { value: m / 2.0 }, bound(m));
        let s = run(&plan(
            &pop,
            theta,
            MethodSpec::Bin { epsilon: eps(e) },
            Tail::Greater,
            n,
            400 + k as u64,
        ));
        let r = s.rejection_rate.get();
        ensure(
            r >= 0.77,
            format!("theta/m {ratio} eps {e} n {n}: power {r:.3} < 0.77"),
        )?;
        report.push(format!("{r:.3}@n={n}"));
    }
    Ok(format!("power {}", report.join(", ")))
}

fn power_bound_validity() -> Check {
    let (m, e, alpha) = (1.0, 1.0, 0.05);
    let pop = PopulationSpec::new(
        PopulationKind::TwoPoint {
            p: 0.4,
            lo: 0.1,
            hi: 0.7,
        },
        bound(m),
    );
    let mut slack = f64::INFINITY;
    let mut absent = 0;
    for (i, theta) in [0.05, 0.1, 0.2].into_iter().enumerate() {
        for (j, n) in [500usize, 2000, 8000].into_iter().enumerate() {
            let effect = EffectSpec::new(theta, eps(e), bound(m)).unwrap();
            let s = run(&plan(
                &pop,
                theta,
                MethodSpec::Bin { epsilon: eps(e) },
                Tail::Greater,
                n,
                500 + 10 * i as u64 + j as u64,
            ));
            let power = s.rejection_rate.get();
            let sigma = s.standard_error();
            let sizes = power_bound_normal_sizes(&effect, n as u64, n as u64, alpha)
                .unwrap()
                .get();
            ensure(
                power >= sizes - 3.0 * sigma,
                format!("theta {theta} n {n}: power {power:.3} below size bound {sizes:.3}"),
            )?;
            slack = slack.min(power - sizes + 3.0 * sigma);
            let inner = effect.p_theta() * (n as f64).sqrt() - (1.0 / alpha).ln().sqrt();
            match power_bound_mcdiarmid(&effect, n as u64, n as u64, alpha).unwrap() {
                Some(b) => {
                    ensure(inner >= 0.0, format!("theta {theta} n {n}: bounded-difference bound present with negative bracket"))?;
                    ensure(
                        power >= b.get() - 3.0 * sigma,
                        format!("theta {theta} n {n}: power {power:.3} below {:.3}", b.get()),
                    )?;
                    slack = slack.min(power - b.get() + 3.0 * sigma);
                }
                None => {
                    ensure(
                        inner < 0.0,
                        format!("theta {theta} n {n}: bound absent with bracket {inner}"),
                    )?;
                    absent += 1;
                }
            }
        }
    }
    Ok(format!(
        "min slack {slack:.3}, bounded-difference bound absent in {absent}/9 cells"
    ))
}

fn private_mean(xs: &[f64], e: f64, m: DomainBound, rng: &mut StreamRng) -> f64 {
    let bits = OneBitMechanism::new(eps(e), m)
        .randomize_all(xs, rng)
        .unwrap();
    estimate_mean(&BitSample::new(bits, eps(e), m).unwrap()).unwrap()
}

fn estimator_suites() -> Check {
    let m = bound(50.0);
    let mut rng = StreamRng::new(600);
    let xs: Vec<f64> = (0..100).map(|_| rng.gen_range(0.0..50.0)).collect();
    let truth = xs.iter().sum::<f64>() / xs.len() as f64;
    let est: Vec<f64> = (0..10_000)
        .map(|_| private_mean(&xs, 1.5, m, &mut rng))
        .collect();
    let (mean, sd) = mean_sd(&est);
    let se = sd / 100.0;
    ensure(
        (mean - truth).abs() <= 4.0 * se,
        format!("mean estimator off by {:.2} SE", (mean - truth) / se),
    )?;

    let unit = bound(1.0);
    let vars: Vec<f64> = [1_000usize, 4_000, 16_000]
        .iter()
        .map(|&n| {
            let xs: Vec<f64> = (0..n).map(|i| (i % 4) as f64 / 3.0).collect();
            let est: Vec<f64> = (0..2_000)
                .map(|_| private_mean(&xs, 1.0, unit, &mut rng))
                .collect();
            mean_sd(&est).1.powi(2)
        })
        .collect();
    let ratios: Vec<f64> = vars.windows(2).map(|w| w[0] / w[1]).collect();
    ensure(
        ratios.iter().all(|r| (r - 4.0).abs() <= 1.0),
        format!("variance ratios {ratios:?}"),
    )?;

    let (n, e1) = (10_000usize, 2.5);
    let split = BudgetSplit::new(eps(e1), eps(2.5));
    let point = vec![0.5; n];
    let est: Vec<f64> = (0..500)
        .map(|_| {
            let (a, b) = collect_two_bit_all(&point, unit, split, &mut rng).unwrap();
            estimate_variance(&a, &b).unwrap()
        })
        .collect();
    let (vmean, vsd) = mean_sd(&est);
    let vse = vsd / (500f64).sqrt();
    let floor = -10.0 / (n as f64 * e1 * e1);
    ensure(
        vmean <= 3.0 * vse,
        format!("variance estimate {vmean:e} above the truth by > 3 SE"),
    )?;
    ensure(
        vmean >= floor - 3.0 * vse,
        format!("variance estimate {vmean:e} below the band {floor:e}"),
    )?;
    Ok(format!(
        "mean bias {:.2} SE, variance ratios {:.2}/{:.2}, variance bias {vmean:.1e}",
        (mean - truth) / se,
        ratios[0],
        ratios[1]
    ))
}

fn random_sample(rng: &mut StreamRng, n: usize, m: f64) -> RawSample {
    RawSample::new((0..n).map(|_| rng.gen_range(0.0..=m)).collect(), bound(m)).unwrap()
}

fn degenerate_equivalences() -> Check {
    let mut rng = StreamRng::new(700);
    for i in 0..100 {
        let m = rng.gen_range(1.0..1000.0);
        let (na, nb) = (rng.gen_range(2..80), rng.gen_range(2..80));
        let a = random_sample(&mut rng, na, m);
        let b = random_sample(&mut rng, nb, m);
        let h = Hypothesis::new(rng.gen_range(-m / 4.0..m / 4.0), Tail::TwoSided, 0.05).unwrap();
        let mix = mix_test(
            &a,
            &vec![false; na],
            &b,
            &vec![false; nb],
            eps(1.0),
            &h,
            &mut rng,
        )
        .unwrap();
        let welch = welch_t(&a, &b, &h).unwrap();
        let same = mix.statistic.to_bits() == welch.statistic.to_bits()
            && mix.p_value.get().to_bits() == welch.p_value.get().to_bits()
            && mix.df.map(|d| d.get().to_bits()) == welch.df.map(|d| d.get().to_bits())
            && mix.reject == welch.reject;
        ensure(same, format!("instance {i}: r = 0 differs from welch"))?;
    }
    let h = Hypothesis::equal_means(0.05).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let m = rng.gen_range(1.0..1000.0);
        let e = eps(rng.gen_range(0.2..3.0));
        let a = random_sample(&mut rng, 300, m);
        let b = random_sample(&mut rng, 200, m);
        let bin = bin_test(&a, &b, e, &h, &mut StreamRng::new(seed)).unwrap();
        let mix = mix_test(
            &a,
            &[true; 300],
            &b,
            &[true; 200],
            e,
            &h,
            &mut StreamRng::new(seed),
        )
        .unwrap();
        let rel =
            (mix.statistic - bin.statistic).abs() / bin.statistic.abs().max(f64::MIN_POSITIVE);
        ensure(rel <= 1e-9, format!("seed {seed}: relative gap {rel:e}"))?;
        worst = worst.max(rel);
    }
    Ok(format!(
        "r = 0 bit-identical on 100, r = 1 max relative gap {worst:.1e}"
    ))
}

fn numerics() -> Check {
    let mut rng = StreamRng::new(800);
    let mut round_trip: f64 = 0.0;
    for _ in 0..10_000 {
        let p = if rng.gen_bool(0.5) {
            10f64.powf(rng.gen_range(-10.0..-0.3))
        } else {
            rng.gen_range(1e-9..1.0 - 1e-9)
        };
        round_trip = round_trip.max((normal_cdf(normal_quantile(p).unwrap()).get() - p).abs());
    }
    ensure(
        round_trip <= 1e-9,
        format!("quantile round trip {round_trip:e}"),
    )?;
    let df = |v| DegreesOfFreedom::new(v).unwrap();
    let mut closed: f64 = 0.0;
    for _ in 0..10_000 {
        let t: f64 = rng.gen_range(-50.0..50.0);
        let cauchy = 0.5 + t.atan() / std::f64::consts::PI;
        let two = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
        closed = closed
            .max((student_t_cdf(t, df(1.0)).get() - cauchy).abs())
            .max((student_t_cdf(t, df(2.0)).get() - two).abs());
    }
    ensure(closed <= 1e-10, format!("t closed forms off by {closed:e}"))?;
    let mut limit: f64 = 0.0;
    for k in 0..=200 {
        let x = -5.0 + 0.05 * k as f64;
        limit = limit.max((student_t_cdf(x, df(1e6)).get() - normal_cdf(x).get()).abs());
    }
    ensure(limit <= 1e-5, format!("normal limit off by {limit:e}"))?;
    Ok(format!(
        "round trip {round_trip:.1e}, closed forms {closed:.1e}, normal limit {limit:.1e}"
    ))
}

fn spread_is_invisible() -> Check {
    let m = bound(100.0);
    let n = 100_000;
    let mech = OneBitMechanism::new(eps(1.0), m);
    let mut rng = StreamRng::new(900);
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
    let mut freq = |s: &RawSample| {
        let bits = mech.randomize_all(s.values(), &mut rng).unwrap();
        bits.iter().filter(|b| b.is_one()).count() as f64 / n as f64
    };
    let dp = (freq(&point) - freq(&spread)).abs();
    let dv = spread.variance() - point.variance();
    ensure(dp <= 0.01, format!("|dp| = {dp}"))?;
    ensure(dv >= 100.0 * 100.0 / 5.0, format!("variance gap {dv}"))?;
    Ok(format!("|dp| {dp:.4}, variance gap {dv:.0}"))
}

fn hybrid_ordering() -> Check {
    let m = 15000.0;
    // sd 1500 around 7500
    let pop = PopulationSpec::new(
        PopulationKind::TwoPoint {
            p: 0.5,
            lo: 6000.0,
            hi: 9000.0,
        },
        bound(m),
    );
    let theta = 0.004 * m;
    let rs = [0.0, 0.01, 0.5, 1.0];
    let s: Vec<TrialSummary> = rs
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let method = MethodSpec::Mix {
                epsilon: eps(1.0),
                ldp_fraction: r,
            };
            run(&plan(
                &pop,
                theta,
                method,
                Tail::Greater,
                20_000,
                1000 + i as u64,
            ))
        })
        .collect();
    for i in 0..3 {
        let (a, b) = (&s[i], &s[i + 1]);
        let sigma = (a.standard_error().powi(2) + b.standard_error().powi(2)).sqrt();
        let (pa, pb) = (a.rejection_rate.get(), b.rejection_rate.get());
        ensure(
            pb <= pa + 2.0 * sigma,
            format!(
                "r {} -> {}: power rises {pa:.3} -> {pb:.3}",
                rs[i],
                rs[i + 1]
            ),
        )?;
    }
    let p: Vec<String> = s
        .iter()
        .map(|x| format!("{:.3}", x.rejection_rate.get()))
        .collect();
    Ok(format!("power over r {{0, 0.01, 0.5, 1}}: {}", p.join(" ")))
}

fn main() -> ExitCode {
    let min = |m: u64| Some(Duration::from_secs(60 * m));
    let criteria: [Criterion; 10] = [
        ("1 bin significance", significance_bin, min(2)),
        ("2 hybrid significance", significance_mix, min(2)),
        ("3 est significance violation", est_violation, min(3)),
        ("4 sample-size safety", sample_size_safety, min(5)),
        ("5 power-bound validity", power_bound_validity, min(5)),
        ("6 estimator suites", estimator_suites, min(2)),
        ("7 degenerate equivalences", degenerate_equivalences, None),
        ("8 numerics", numerics, None),
        ("9 spread invisible to one bit", spread_is_invisible, None),
        ("10 hybrid power ordering", hybrid_ordering, None),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if took > l => Err(format!("took {took:.1?}, limit {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} ({took:.1?})"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} ({took:.1?})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
