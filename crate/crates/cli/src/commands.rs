//! The `fit`, `estimate` and `simulate` commands. Each returns a finished
//! report; nothing is written until the whole command has succeeded.

use hetfx::estimands::plugin_ate;
use hetfx::mle::{FitResult, WaldReport};
use hetfx::simulation::StudyOptions;
use hetfx::{
    c_sweep, estimate_binary, fit_binary, fit_continuous, generate, run_study, wald_tests, DgpSpec,
    Estimate, EstimandKind, McReport, OutcomeKind, OutcomeModel,
};

use crate::config::Settings;
use crate::error::CliResult;
use crate::input::{dataset_to_csv, read_dataset, LoadedData};
use crate::report::{table, Record, Report};

/// Output of a command: the report plus an optional emitted dataset.
pub struct Output {
    pub report: Report,
    pub emitted_data: Option<String>,
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

fn p_text(p: f64) -> String {
    if p.is_nan() {
        "NA".into()
    } else if p >= 0.001 {
        format!("{p:.3}")
    } else {
        format!("{p:.1e}")
    }
}

fn level_text(level: f64) -> String {
    format!("{}%", (level * 100.0 * 1e6).round() / 1e6)
}

/// Parameter names with covariate indices replaced by column names.
fn named_parameters<M: OutcomeModel>(covariates: &[String]) -> Vec<String> {
    M::theta_names(covariates.len())
        .into_iter()
        .map(|mut name| {
            for (j, col) in covariates.iter().enumerate() {
                name = name.replace(&format!("[{j}]"), &format!("[{col}]"));
            }
            name
        })
        .collect()
}

fn data_line(kind: OutcomeKind, loaded: &LoadedData) -> String {
    let [n0, n1] = loaded.data.arm_counts();
    let covs = if loaded.covariate_names.is_empty() {
        "none".to_string()
    } else {
        loaded.covariate_names.join(", ")
    };
    format!(
        "{} outcome, n = {} (control {n0}, treated {n1}), covariates: {covs}",
        kind.name(),
        loaded.data.len()
    )
}

fn fit_report<M: OutcomeModel>(
    settings: &Settings,
    kind: OutcomeKind,
    loaded: &LoadedData,
    fit: &FitResult<M>,
) -> CliResult<Report> {
    let names = named_parameters::<M>(&loaded.covariate_names);
    let theta = fit.params.theta();
    let se = fit.std_errors();
    let wald: WaldReport = wald_tests(fit)?;
    let level = settings.ci_level;

    let mut human = format!("Fit: {}\n", data_line(kind, loaded));
    human.push_str(&format!(
        "log-likelihood = {:.4}, converged = {}, iterations = {}, max |score| = {:.1e}\n",
        fit.loglik,
        if fit.converged { "yes" } else { "no" },
        fit.iterations,
        fit.max_score()
    ));
    if !fit.alternative_optima.is_empty() {
        human.push_str(&format!(
            "note: {} other optimum(s) with the same likelihood were found\n",
            fit.alternative_optima.len()
        ));
    }
    human.push('\n');
    let rows: Vec<Vec<String>> = names
        .iter()
        .zip(theta.iter().zip(&se))
        .map(|(n, (t, s))| vec![n.clone(), f4(*t), f4(*s)])
        .collect();
    human.push_str(&table(&["parameter", "estimate", "SE"], &rows));
    human.push_str(&format!(
        "\nLatent loading and interaction terms (Wald, {} CI)\n",
        level_text(level)
    ));

    let mut records = vec![Record::new("fit.summary")
        .with("outcome_kind", kind.name())
        .with("n", loaded.data.len())
        .with("n_control", fit.n_used[0])
        .with("n_treated", fit.n_used[1])
        .with("loglik", fit.loglik)
        .with("converged", fit.converged)
        .with("iterations", fit.iterations)
        .with("max_score", fit.max_score())
        .with("alternative_optima", fit.alternative_optima.len())];
    for (n, (t, s)) in names.iter().zip(theta.iter().zip(&se)) {
        records.push(Record::new("fit.param").with("name", n).with("estimate", t).with("se", s));
    }

    let wald_rows: Vec<Vec<String>> = wald
        .entries
        .iter()
        .map(|e| -> CliResult<Vec<String>> {
            let (lo, hi) = e.interval(level)?;
            let name = names
                .iter()
                .zip(M::theta_names(loaded.covariate_names.len()))
                .find(|(_, raw)| *raw == e.name)
                .map_or(e.name.clone(), |(n, _)| n.clone());
            records.push(
                Record::new("fit.wald")
                    .with("name", &name)
                    .with("estimate", e.estimate)
                    .with("se", e.se)
                    .with("z", e.z)
                    .with("p_value", e.p_value)
                    .with("ci_level", level)
                    .with("ci_lower", lo)
                    .with("ci_upper", hi),
            );
            Ok(vec![
                name,
                format!(
                    "coef={:.2}, p={}, CI=({:.2}, {:.2})",
                    e.estimate,
                    p_text(e.p_value),
                    lo,
                    hi
                ),
            ])
        })
        .collect::<CliResult<_>>()?;
    human.push_str(&table(&["term", "test"], &wald_rows));
    let j = &wald.interactions;
    human.push_str(&format!(
        "joint test of no covariate-latent interaction: chi2 = {:.3}, df = {}, p = {}\n",
        j.statistic,
        j.df,
        p_text(j.p_value)
    ));
    records.push(
        Record::new("fit.joint_wald")
            .with("statistic", j.statistic)
            .with("df", j.df)
            .with("p_value", j.p_value),
    );
    Ok(Report { human, records })
}

fn load(settings: &Settings) -> CliResult<(OutcomeKind, LoadedData)> {
    let kind = settings.require_kind()?;
    let path = settings.require_input()?;
    Ok((kind, read_dataset(path, settings, kind)?))
}

pub fn cmd_fit(settings: &Settings) -> CliResult<Output> {
    let (kind, loaded) = load(settings)?;
    let opts = hetfx::OptimOptions {
        seed: settings.seed,
        ..settings.fit
    };
    let report = match kind {
        OutcomeKind::Continuous => {
            fit_report(settings, kind, &loaded, &fit_continuous(&loaded.data, &opts)?)?
        }
        OutcomeKind::Binary => fit_report(settings, kind, &loaded, &fit_binary(&loaded.data, &opts)?)?,
    };
    Ok(Output {
        report,
        emitted_data: None,
    })
}

fn estimate_record(e: &Estimate, level: f64) -> CliResult<Record> {
    let (lo, hi) = e.interval(level)?;
    let mut r = Record::new("estimate.row").with("estimand", e.kind.label());
    if let Some(c) = e.c {
        r = r.with("c", c);
    }
    Ok(r.with("value", e.value)
        .with("se", e.se)
        .with("ci_level", level)
        .with("ci_lower", lo)
        .with("ci_upper", hi)
        .with("p_value", e.p_value_zero())
        .with("n", e.n))
}

fn ci_text(e: &Estimate, level: f64) -> CliResult<String> {
    let (lo, hi) = e.interval(level)?;
    Ok(format!("({}, {})", f4(lo.clamp(0.0, 1.0)), f4(hi.clamp(0.0, 1.0))))
}

pub fn cmd_estimate(settings: &Settings) -> CliResult<Output> {
    let (kind, loaded) = load(settings)?;
    let data = &loaded.data;
    let level = settings.ci_level;
    let ci_head = format!("{} CI", level_text(level));
    let opts = hetfx::OptimOptions {
        seed: settings.seed,
        ..settings.fit
    };
    let mut human = format!("Estimates: {}\n\n", data_line(kind, &loaded));
    let mut records = vec![Record::new("estimate.summary")
        .with("outcome_kind", kind.name())
        .with("n", data.len())
        .with("ci_level", level)];

    match kind {
        OutcomeKind::Continuous => {
            let cs = match &settings.cs {
                Some(cs) if !cs.is_empty() => cs.clone(),
                _ => {
                    return Err(crate::error::CliError::input(
                        "continuous estimands need at least one margin (--c LIST)",
                    ))
                }
            };
            let fit = fit_continuous(data, &opts)?;
            let mut rows = Vec::new();
            for (b, h) in c_sweep(&fit, data, &cs)? {
                rows.push(vec![
                    format!("{}", b.c.unwrap_or(f64::NAN)),
                    f4(b.value),
                    ci_text(&b, level)?,
                    f4(h.value),
                    ci_text(&h, level)?,
                ]);
                records.push(estimate_record(&b, level)?);
                records.push(estimate_record(&h, level)?);
            }
            human.push_str(&table(&["c", "TBR_c", &ci_head, "THR_c", &ci_head], &rows));
        }
        OutcomeKind::Binary => {
            let fit = fit_binary(data, &opts)?;
            let tbr = estimate_binary(&fit, data, EstimandKind::Benefit)?;
            let thr = estimate_binary(&fit, data, EstimandKind::Harm)?;
            let mut rows = Vec::new();
            for e in [&tbr, &thr] {
                rows.push(vec![
                    e.kind.label().to_string(),
                    f4(e.value),
                    f4(e.se),
                    ci_text(e, level)?,
                    p_text(e.p_value_zero()),
                ]);
                records.push(estimate_record(e, level)?);
            }
            human.push_str(&table(&["estimand", "estimate", "SE", &ci_head, "p (rate = 0)"], &rows));
            let diff = tbr.value - thr.value;
            let ate = plugin_ate(&fit.params, data);
            human.push_str(&format!(
                "\nTBR - THR   = {diff:.6}\nplug-in ATE = {ate:.6}\n"
            ));
            records.push(
                Record::new("estimate.identity")
                    .with("tbr_minus_thr", diff)
                    .with("plugin_ate", ate)
                    .with("gap", (diff - ate).abs()),
            );
        }
    }
    Ok(Output {
        report: Report { human, records },
        emitted_data: None,
    })
}

fn study_spec(settings: &Settings, kind: OutcomeKind) -> DgpSpec {
    let mut spec = DgpSpec::default_for(kind);
    if let Some(n) = settings.n {
        spec = spec.with_n(n);
    }
    if let Some(p) = settings.treat_prob {
        spec.treat_prob = p;
    }
    spec
}

fn study_rows(report: &McReport, rows: &mut Vec<Vec<String>>, records: &mut Vec<Record>) {
    let latent = report.latent.to_string();
    records.push(
        Record::new("simulate.study")
            .with("latent", &latent)
            .with("outcome_kind", report.outcome_kind.name())
            .with("n", report.n)
            .with("seed", report.seed)
            .with("reps", report.reps_attempted)
            .with("converged", report.reps_converged)
            .with("non_convergence", report.failures.non_convergence)
            .with("identification", report.failures.identification)
            .with("other_failures", report.failures.other),
    );
    for (i, row) in report.rows.iter().enumerate() {
        let ese = row.ese.unwrap_or(f64::NAN);
        rows.push(vec![
            if i == 0 { latent.clone() } else { String::new() },
            row.kind.label().to_string(),
            row.c.map_or("-".to_string(), |c| format!("{c}")),
            f4(row.true_value),
            format!("{:+.4}", row.mean_bias),
            f4(row.ase),
            if ese.is_nan() { "NA".into() } else { f4(ese) },
            format!("{:.3}", row.coverage),
            format!("{}/{}", report.reps_converged, report.reps_attempted),
        ]);
        let mut r = Record::new("simulate.row")
            .with("latent", &latent)
            .with("estimand", row.kind.label());
        if let Some(c) = row.c {
            r = r.with("c", c);
        }
        records.push(
            r.with("true_value", row.true_value)
                .with("truth_mc_se", row.truth_mc_se)
                .with("mean_estimate", row.mean_estimate)
                .with("bias", row.mean_bias)
                .with("ase", row.ase)
                .with("ese", ese)
                .with("coverage", row.coverage),
        );
    }
}

pub fn cmd_simulate(settings: &Settings) -> CliResult<Output> {
    let kind = settings.outcome_kind.unwrap_or(OutcomeKind::Continuous);
    let base = study_spec(settings, kind);
    let mut opts = StudyOptions::new(
        settings.reps,
        settings.seed,
        settings.cs.clone().unwrap_or_else(|| vec![1.0]),
    );
    opts.fit = hetfx::OptimOptions {
        seed: 0,
        ..settings.fit
    };
    if let Some(d) = settings.truth_draws {
        opts.truth_draws = d;
    }

    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &latent in &settings.latents {
        let spec = base.clone().with_latent(latent);
        let report = run_study(&spec, &opts)?;
        study_rows(&report, &mut rows, &mut records);
    }
    let mut human = format!(
        "Monte Carlo study: {} outcome, n = {}, {} replications, seed {}\n\n",
        kind.name(),
        base.n,
        settings.reps,
        settings.seed
    );
    human.push_str(&table(
        &["latent U", "estimand", "c", "true value", "bias", "ASE", "ESE", "coverage", "converged"],
        &rows,
    ));

    let emitted_data = match &settings.emit_data {
        Some(_) => {
            let spec = base.with_latent(settings.latents[0]);
            let (data, _) = generate(&spec, settings.seed)?;
            Some(dataset_to_csv(&data))
        }
        None => None,
    };
    Ok(Output {
        report: Report { human, records },
        emitted_data,
    })
}
