mod common;

use common::*;
use hetfx::estimands::EstimandKind;
use hetfx::numerics::{mean, variance};
use hetfx::simulation::dgp::{reference_binary_params, reference_continuous_params};
use hetfx::simulation::truth::{DEFAULT_TRUTH_DRAWS, DEFAULT_TRUTH_SEED};
use hetfx::simulation::{generate, run_study, true_estimand, true_rates, DgpSpec, LatentDist, StudyOptions};
use hetfx::Error;

fn families() -> Vec<LatentDist> {
    vec![
        LatentDist::Normal,
        LatentDist::StudentT { df: 3.0 },
        LatentDist::StudentT { df: 10.0 },
        LatentDist::ChiSquared { df: 3.0 },
        LatentDist::ChiSquared { df: 10.0 },
        LatentDist::Poisson { rate: 3.0 },
        LatentDist::Poisson { rate: 10.0 },
        LatentDist::Bernoulli { prob: 0.5 },
    ]
}

#[test]
fn same_seed_same_bytes() {
    let spec = DgpSpec::default_binary().with_latent(LatentDist::ChiSquared { df: 3.0 });
    let a = format!("{:?}", generate(&spec, 99).unwrap());
    let b = format!("{:?}", generate(&spec, 99).unwrap());
    assert_eq!(a, b);
}

#[test]
fn latent_draws_are_standardized() {
    use rand::SeedableRng;
    for fam in families() {
        let s = fam.sampler().unwrap();
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let u: Vec<f64> = (0..1_000_000).map(|_| s.sample(&mut r)).collect();
        let (m, v) = (mean(&u), variance(&u));
        assert!(m.abs() <= 0.01, "{fam}: mean {m}");
        if let LatentDist::StudentT { df } = fam {
            if df <= 4.0 {
                // Infinite fourth moment: the sample variance converges too
                // slowly to test. Check the scaled CDF against t(df) instead.
                standardized_t_cdf_matches(&u, df);
                continue;
            }
        }
        assert!((v - 1.0).abs() <= 0.01, "{fam}: variance {v}");
    }
}

fn standardized_t_cdf_matches(u: &[f64], df: f64) {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let t = StudentsT::new(0.0, 1.0, df).unwrap();
    let scale = ((df - 2.0) / df).sqrt();
    let n = u.len() as f64;
    for q in [-3.0, -1.5, -0.5, 0.0, 0.7, 2.0, 4.0] {
        let want = t.cdf(q / scale);
        let got = u.iter().filter(|&&v| v <= q).count() as f64 / n;
        let se = (want * (1.0 - want) / n).sqrt();
        assert!((got - want).abs() <= 4.0 * se, "q={q}: {got} vs {want}");
    }
}

#[test]
fn treatment_is_balanced() {
    let n = 100_000;
    let (data, _) = generate(&DgpSpec::default_continuous().with_n(n), 5).unwrap();
    let share = data.arm_counts()[1] as f64 / n as f64;
    assert!((share - 0.5).abs() <= 3.0 * (0.25 / n as f64).sqrt(), "{share}");
}

#[test]
fn certain_event_has_rate_one() {
    let t = true_estimand(&DgpSpec::default_continuous(), EstimandKind::BenefitAbove, Some(-1e9)).unwrap();
    assert_eq!(t.value, 1.0);
}

fn population_average(f: impl Fn(&[f64]) -> f64, draws: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let vals: Vec<f64> = (0..draws)
        .map(|_| {
            let x = random_covariates(&mut r, 3);
            f(&x)
        })
        .collect();
    (mean(&vals), (variance(&vals) / draws as f64).sqrt())
}

#[test]
fn continuous_truth_agrees_with_closed_form() {
    let spec = DgpSpec::default_continuous();
    let truth = true_rates(&spec, Some(1.0), DEFAULT_TRUTH_DRAWS, DEFAULT_TRUTH_SEED).unwrap();
    let m = reference_continuous_params();
    let (b, b_se) = population_average(|x| m.benefit_prob(x, 1.0), 1_000_000, 1);
    let (h, h_se) = population_average(|x| m.harm_prob(x, 1.0), 1_000_000, 1);
    let tol = |a: f64, b: f64| 3.0 * (a * a + b * b).sqrt();
    assert!((truth.benefit.value - b).abs() <= tol(truth.benefit.mc_se, b_se), "{:?} vs {b}", truth.benefit);
    assert!((truth.harm.value - h).abs() <= tol(truth.harm.mc_se, h_se), "{:?} vs {h}", truth.harm);
    assert!(truth.benefit.mc_se <= 2e-4);
}

#[test]
fn binary_truth_agrees_with_closed_form() {
    let spec = DgpSpec::default_binary();
    let truth = true_rates(&spec, None, DEFAULT_TRUTH_DRAWS, DEFAULT_TRUTH_SEED).unwrap();
    let m = reference_binary_params();
    let (b, b_se) = population_average(|x| m.g01(x).unwrap(), 1_000_000, 2);
    let (h, h_se) = population_average(|x| m.g10(x).unwrap(), 1_000_000, 2);
    let tol = |a: f64, b: f64| 3.0 * (a * a + b * b).sqrt();
    assert!((truth.benefit.value - b).abs() <= tol(truth.benefit.mc_se, b_se), "{:?} vs {b}", truth.benefit);
    assert!((truth.harm.value - h).abs() <= tol(truth.harm.mc_se, h_se), "{:?} vs {h}", truth.harm);
}

fn small_study(kind: hetfx::OutcomeKind, reps: usize) -> StudyOptions {
    let mut opts = StudyOptions::new(reps, 2024, vec![1.0]);
    opts.truth_draws = 200_000;
    let _ = kind;
    opts
}

#[test]
fn study_does_not_depend_on_worker_count() {
    let spec = DgpSpec::default_binary();
    let opts = small_study(hetfx::OutcomeKind::Binary, 6);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_study(&spec, &opts).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(format!("{one:?}"), format!("{three:?}"));
    assert_eq!(one.reps_attempted, 6);
    assert!(one.reps_converged <= one.reps_attempted);
    for row in &one.rows {
        assert!((0.0..=1.0).contains(&row.coverage));
    }
}

#[test]
fn single_replication_has_no_ese() {
    let spec = DgpSpec::default_continuous();
    let report = run_study(&spec, &small_study(hetfx::OutcomeKind::Continuous, 1)).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report.rows.iter().all(|r| r.ese.is_none()));
}

#[test]
fn all_failed_replications_is_study_error() {
    let spec = DgpSpec::default_continuous().with_n(10);
    let err = run_study(&spec, &small_study(hetfx::OutcomeKind::Continuous, 3)).unwrap_err();
    assert!(matches!(err, Error::Study(_)));
    let mut opts = small_study(hetfx::OutcomeKind::Continuous, 3);
    opts.reps = 0;
    assert!(run_study(&DgpSpec::default_continuous(), &opts).is_err());
}
