//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits nonzero if any fails.
//!
//! Run with `cargo test -p hetfx --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use hetfx::data::Dataset;
use hetfx::estimands::{c_sweep, estimate_binary, estimate_continuous, plugin_ate, EstimandKind};
use hetfx::mle::{default_fit_options, fit_binary, fit_continuous};
use hetfx::model::OutcomeKind;
use hetfx::numerics::bvn::{bvn_rect, Rect2};
use hetfx::numerics::normal::std_normal_cdf;
use hetfx::numerics::optimize::{maximize, OptimOptions};
use hetfx::simulation::{derive_seed, generate, run_study, DgpSpec, LatentDist, McReport, StudyOptions};
use rand::Rng;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Accumulates sub-checks; a criterion passes only if all of them do.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failed.push(what);
        }
    }

    fn finish(self) -> Outcome {
        let pass = self.failed.is_empty();
        let detail = if pass {
            self.notes.join("; ")
        } else {
            format!("failed: {} | passed: {}", self.failed.join("; "), self.notes.join("; "))
        };
        Outcome { pass, detail }
    }
}

fn kinds(kind: OutcomeKind) -> [EstimandKind; 2] {
    match kind {
        OutcomeKind::Continuous => [EstimandKind::BenefitAbove, EstimandKind::HarmAbove],
        OutcomeKind::Binary => [EstimandKind::Benefit, EstimandKind::Harm],
    }
}

fn study(kind: OutcomeKind, latent: LatentDist, reps: usize, seed: u64) -> Result<McReport, String> {
    let spec = DgpSpec::default_for(kind).with_latent(latent);
    let opts = StudyOptions::new(reps, seed, vec![1.0]);
    run_study(&spec, &opts).map_err(|e| e.to_string())
}

fn c_of(kind: OutcomeKind) -> Option<f64> {
    match kind {
        OutcomeKind::Continuous => Some(1.0),
        OutcomeKind::Binary => None,
    }
}

/// Bias, ASE, ESE and coverage checks shared by the replication criteria.
fn table_row_checks(
    checks: &mut Checks,
    report: &McReport,
    bias_tol: f64,
    ase_target: Option<[f64; 2]>,
    coverage: (f64, f64),
) {
    let kind = report.outcome_kind;
    for (j, k) in kinds(kind).into_iter().enumerate() {
        let Some(row) = report.row(k, c_of(kind)) else {
            checks.check(false, format!("{} row missing", k.label()));
            continue;
        };
        let label = k.label();
        checks.check(
            row.mean_bias.abs() <= bias_tol,
            format!("{label} bias {:+.4}", row.mean_bias),
        );
        if let Some(target) = ase_target {
            checks.check(
                (row.ase - target[j]).abs() <= 0.004,
                format!("{label} ASE {:.4} (target {:.3})", row.ase, target[j]),
            );
            let ese = row.ese.unwrap_or(f64::NAN);
            checks.check(
                (row.ase - ese).abs() <= 0.004,
                format!("{label} ESE {ese:.4}"),
            );
        }
        checks.check(
            row.coverage >= coverage.0 && row.coverage <= coverage.1,
            format!("{label} coverage {:.3}", row.coverage),
        );
    }
}

fn truth_checks(checks: &mut Checks, report: &McReport, target: [f64; 2], tol: f64, tag: &str) {
    let kind = report.outcome_kind;
    for (j, k) in kinds(kind).into_iter().enumerate() {
        if let Some(row) = report.row(k, c_of(kind)) {
            checks.check(
                (row.true_value - target[j]).abs() <= tol,
                format!(
                    "{tag}{} truth {:.4} (reference {:.3})",
                    k.label(),
                    row.true_value,
                    target[j]
                ),
            );
        }
    }
}

fn criterion_1() -> Outcome {
    let mut checks = Checks::default();
    match study(OutcomeKind::Continuous, LatentDist::Normal, 300, SEED) {
        Ok(report) => {
            table_row_checks(&mut checks, &report, 0.006, Some([0.017, 0.015]), (0.91, 0.98));
            checks.notes.push(format!(
                "{}/{} converged",
                report.reps_converged, report.reps_attempted
            ));
        }
        Err(e) => checks.check(false, e),
    }
    checks.finish()
}

fn criterion_2() -> Outcome {
    let mut checks = Checks::default();
    match study(OutcomeKind::Binary, LatentDist::Normal, 300, SEED + 1) {
        Ok(report) => {
            truth_checks(&mut checks, &report, [0.363, 0.241], 0.003, "");
            table_row_checks(&mut checks, &report, 0.006, Some([0.016, 0.013]), (0.91, 0.98));
            let rate = report.non_convergence_rate();
            checks.check(rate <= 0.05, format!("non-convergence {:.1}%", 100.0 * rate));
        }
        Err(e) => checks.check(false, e),
    }
    checks.finish()
}

fn criterion_3() -> Outcome {
    // Reference truths for (benefit, harm), continuous then binary.
    let rows: [(LatentDist, [f64; 2], [f64; 2]); 4] = [
        (LatentDist::StudentT { df: 3.0 }, [0.448, 0.347], [0.339, 0.305]),
        (LatentDist::ChiSquared { df: 3.0 }, [0.448, 0.349], [0.315, 0.301]),
        (LatentDist::Poisson { rate: 3.0 }, [0.449, 0.348], [0.297, 0.295]),
        (LatentDist::Bernoulli { prob: 0.5 }, [0.450, 0.349], [0.243, 0.288]),
    ];
    let mut checks = Checks::default();
    for (i, (latent, cont, bin)) in rows.into_iter().enumerate() {
        for (kind, target) in [(OutcomeKind::Continuous, cont), (OutcomeKind::Binary, bin)] {
            let tag = format!("{latent} {} ", kind.name());
            match study(kind, latent, 200, SEED + 10 + i as u64) {
                Ok(report) => {
                    truth_checks(&mut checks, &report, target, 0.005, &tag);
                    let mut sub = Checks::default();
                    table_row_checks(&mut sub, &report, 0.01, None, (0.90, 0.98));
                    for f in sub.failed {
                        checks.check(false, format!("{tag}{f}"));
                    }
                }
                Err(e) => checks.check(false, format!("{tag}{e}")),
            }
        }
    }
    let n_ok = checks.notes.len();
    let mut out = checks.finish();
    if out.pass {
        out.detail = format!("{n_ok} truth checks and all bias/coverage checks within tolerance");
    }
    out
}

fn criterion_4() -> Outcome {
    let mut rng = rng(SEED + 4);
    let (mut worst_cont, mut worst_bin) = (0.0_f64, 0.0_f64);
    for _ in 0..200 {
        let p = rng.gen_range(1..4);
        let x = random_covariates(&mut rng, p);
        let c = rng.gen_range(-2.0..2.0);
        let m = random_continuous(&mut rng, p);
        worst_cont = worst_cont
            .max((m.benefit_prob(&x, c) - benefit_oracle(&m, &x, c)).abs())
            .max((m.harm_prob(&x, c) - harm_oracle(&m, &x, c)).abs());
        let b = random_binary(&mut rng, p);
        let e01 = b.g01(&x).map_or(f64::INFINITY, |v| (v - g01_oracle(&b, &x)).abs());
        let e10 = b.g10(&x).map_or(f64::INFINITY, |v| (v - g10_oracle(&b, &x)).abs());
        worst_bin = worst_bin.max(e01).max(e10);
    }
    let mut checks = Checks::default();
    checks.check(worst_cont <= 1e-6, format!("max |m_B,m_H - oracle| {worst_cont:.1e}"));
    checks.check(worst_bin <= 1e-6, format!("max |g01,g10 - oracle| {worst_bin:.1e}"));
    checks.finish()
}

fn criterion_5() -> Outcome {
    let mut checks = Checks::default();

    let spec = DgpSpec::default_binary();
    let (mut fits, mut failed, mut worst_ate) = (0, 0, 0.0_f64);
    let mut seed_index = 0;
    while fits < 50 && seed_index < 200 {
        let seed = derive_seed(SEED + 5, seed_index);
        seed_index += 1;
        let Ok((data, _)) = generate(&spec, seed) else { continue };
        let Ok(fit) = fit_binary(&data, &OptimOptions { seed, ..default_fit_options() }) else {
            failed += 1;
            continue;
        };
        let tbr = estimate_binary(&fit, &data, EstimandKind::Benefit);
        let thr = estimate_binary(&fit, &data, EstimandKind::Harm);
        match (tbr, thr) {
            (Ok(b), Ok(h)) => {
                worst_ate = worst_ate.max((b.value - h.value - plugin_ate(&fit.params, &data)).abs());
                fits += 1;
            }
            _ => failed += 1,
        }
    }
    checks.check(
        fits == 50 && worst_ate <= 1e-8,
        format!("TBR-THR vs ATE max gap {worst_ate:.1e} over {fits} fits ({failed} failed fits skipped)"),
    );

    let mut rng = rng(SEED + 50);
    let mut worst_sum = 0.0_f64;
    for _ in 0..1000 {
        let p = rng.gen_range(1..4);
        let m = random_continuous(&mut rng, p);
        let x = random_covariates(&mut rng, p);
        let c = rng.gen_range(-3.0..3.0);
        worst_sum = worst_sum.max((m.benefit_prob(&x, c) + m.harm_prob(&x, -c) - 1.0).abs());
    }
    checks.check(worst_sum <= 1e-12, format!("m_B(c)+m_H(-c) max gap {worst_sum:.1e}"));

    let spec = DgpSpec::default_continuous();
    let cs: Vec<f64> = (0..=12).map(|i| -3.0 + 0.5 * i as f64).collect();
    let (mut swept, mut violations) = (0, 0);
    for i in 0..50 {
        let seed = derive_seed(SEED + 51, i);
        let Ok((data, _)) = generate(&spec, seed) else { continue };
        let Ok(fit) = fit_continuous(&data, &OptimOptions { seed, ..default_fit_options() }) else {
            continue;
        };
        let Ok(rows) = c_sweep(&fit, &data, &cs) else {
            violations += 1;
            continue;
        };
        swept += 1;
        let monotone = rows
            .windows(2)
            .all(|w| w[1].0.value <= w[0].0.value && w[1].1.value <= w[0].1.value);
        violations += (!monotone) as usize;
    }
    checks.check(
        swept > 0 && violations == 0,
        format!("sweep monotone on {swept} converged fits ({violations} violations)"),
    );
    checks.finish()
}

fn bootstrap_sd<F>(data: &Dataset, resamples: usize, seed: u64, estimate: F) -> (f64, usize)
where
    F: Fn(&Dataset, u64) -> Option<f64>,
{
    let mut rng = rng(seed);
    let n = data.len();
    let mut values = Vec::with_capacity(resamples);
    let mut failed = 0;
    for b in 0..resamples {
        let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        match estimate(&data.select(&rows), derive_seed(seed, b as u64)) {
            Some(v) => values.push(v),
            None => failed += 1,
        }
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    (var.sqrt(), failed)
}

fn criterion_6() -> Outcome {
    let mut checks = Checks::default();
    for kind in [OutcomeKind::Continuous, OutcomeKind::Binary] {
        let spec = DgpSpec::default_for(kind);
        let seed = SEED + 6;
        let (data, _) = match generate(&spec, seed) {
            Ok(v) => v,
            Err(e) => {
                checks.check(false, e.to_string());
                continue;
            }
        };
        for k in kinds(kind) {
            let point = |d: &Dataset, s: u64| -> Option<(f64, f64)> {
                let opts = OptimOptions { seed: s, ..default_fit_options() };
                let est = match kind {
                    OutcomeKind::Continuous => {
                        estimate_continuous(&fit_continuous(d, &opts).ok()?, d, k, 1.0)
                    }
                    OutcomeKind::Binary => estimate_binary(&fit_binary(d, &opts).ok()?, d, k),
                };
                est.ok().map(|e| (e.value, e.se))
            };
            let Some((_, se)) = point(&data, seed) else {
                checks.check(false, format!("{} fit on the original data failed", k.label()));
                continue;
            };
            let (boot, failed) = bootstrap_sd(&data, 200, seed + 1, |d, s| point(d, s).map(|v| v.0));
            let ratio = se / boot;
            checks.check(
                (0.8..=1.25).contains(&ratio),
                format!(
                    "{} IF SE {se:.4} / bootstrap SE {boot:.4} = {ratio:.3} ({failed} failed resamples)",
                    k.label()
                ),
            );
        }
    }
    checks.finish()
}

fn criterion_7() -> Outcome {
    let mut checks = Checks::default();

    let worst = (0..10_000)
        .map(|i| {
            let z = -9.0 + 18.0 * i as f64 / 9_999.0;
            (std_normal_cdf(z) - phi_by_quadrature(z)).abs()
        })
        .fold(0.0_f64, f64::max);
    checks.check(worst <= 1e-12, format!("max |Phi - quadrature| {worst:.1e}"));

    let mut rng = rng(SEED + 7);
    let inf = f64::INFINITY;
    let mut worst_sum = 0.0_f64;
    for _ in 0..100 {
        let a: [[f64; 2]; 2] = [
            [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
            [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
        ];
        let mut sigma = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                sigma[i][j] = a[i][0] * a[j][0] + a[i][1] * a[j][1] + if i == j { 0.05 } else { 0.0 };
            }
        }
        let mu = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let q = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let quads = [
            ([-inf, -inf], q),
            ([q[0], -inf], [inf, q[1]]),
            ([-inf, q[1]], [q[0], inf]),
            (q, [inf, inf]),
        ];
        let total: f64 = quads
            .iter()
            .map(|&(lo, hi)| {
                Rect2::new(lo, hi)
                    .and_then(|r| bvn_rect(&r, mu, sigma))
                    .unwrap_or(f64::NAN)
            })
            .sum();
        worst_sum = worst_sum.max((total - 1.0).abs());
    }
    checks.check(worst_sum <= 1e-8, format!("quadrant sums max gap {worst_sum:.1e}"));

    let mut recovered = 0;
    let mut worst_arg = 0.0_f64;
    for _ in 0..100 {
        let d = rng.gen_range(1..8);
        let a: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let q: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| a[i][k] * a[j][k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 })
                    .collect()
            })
            .collect();
        let x_star: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let f = |t: &[f64]| {
            let dx: Vec<f64> = t.iter().zip(&x_star).map(|(a, b)| a - b).collect();
            -0.5 * (0..d)
                .map(|i| (0..d).map(|j| dx[i] * q[i][j] * dx[j]).sum::<f64>())
                .sum::<f64>()
        };
        let opts = OptimOptions { gradient_tolerance: 1e-9, ..OptimOptions::default() };
        if let Ok(m) = maximize(&f, &vec![0.0; d], &opts) {
            let err = m.theta.iter().zip(&x_star).fold(0.0_f64, |e, (a, b)| e.max((a - b).abs()));
            worst_arg = worst_arg.max(err);
            recovered += (m.converged && err <= 1e-6) as usize;
        }
    }
    checks.check(
        recovered == 100,
        format!("{recovered}/100 quadratics recovered, max argmax error {worst_arg:.1e}"),
    );
    checks.finish()
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 7] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
    ];
    let mut all_pass = true;
    for (id, run) in criteria {
        let start = Instant::now();
        let out = run();
        all_pass &= out.pass;
        println!(
            "criterion {id}: {} [{:.1}s] {}",
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
