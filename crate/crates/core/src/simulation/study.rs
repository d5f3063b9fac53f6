//! Monte Carlo study driver: generate, fit, estimate, summarize.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{generate, DgpSpec, TruthParams};
use super::latent::LatentDist;
use super::truth::{true_rates, TruthValue, DEFAULT_TRUTH_DRAWS, DEFAULT_TRUTH_SEED};
use super::derive_seed;
use crate::error::{Error, Result};
use crate::estimands::{estimate_binary, estimate_continuous, Estimate, EstimandKind};
use crate::mle::{fit_binary, fit_continuous};
use crate::model::OutcomeKind;
use crate::numerics::optimize::OptimOptions;
use crate::numerics::{mean, pairwise_sum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub reps: usize,
    pub seed: u64,
    /// Margins for continuous outcomes; ignored for binary ones.
    pub cs: Vec<f64>,
    pub fit: OptimOptions,
    pub truth_draws: u64,
    pub truth_seed: u64,
}

impl StudyOptions {
    pub fn new(reps: usize, seed: u64, cs: Vec<f64>) -> Self {
        Self {
            reps,
            seed,
            cs,
            fit: crate::mle::default_fit_options(),
            truth_draws: DEFAULT_TRUTH_DRAWS,
            truth_seed: DEFAULT_TRUTH_SEED,
        }
    }
}

/// Summary of one estimand across converged replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub kind: EstimandKind,
    pub c: Option<f64>,
    pub true_value: f64,
    pub truth_mc_se: f64,
    pub mean_estimate: f64,
    pub mean_bias: f64,
    /// Mean of the estimated standard errors.
    pub ase: f64,
    /// Standard deviation of the point estimates; absent with fewer than
    /// two converged replications.
    pub ese: Option<f64>,
    pub coverage: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub non_convergence: usize,
    pub identification: usize,
    pub other: usize,
}

impl FailureCounts {
    pub fn total(&self) -> usize {
        self.non_convergence + self.identification + self.other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub outcome_kind: OutcomeKind,
    pub latent: LatentDist,
    pub n: usize,
    pub seed: u64,
    pub reps_attempted: usize,
    pub reps_converged: usize,
    pub failures: FailureCounts,
    pub rows: Vec<McRow>,
}

impl McReport {
    pub fn non_convergence_rate(&self) -> f64 {
        1.0 - self.reps_converged as f64 / self.reps_attempted as f64
    }

    pub fn row(&self, kind: EstimandKind, c: Option<f64>) -> Option<&McRow> {
        self.rows.iter().find(|r| r.kind == kind && r.c == c)
    }
}

/// Estimates of one replication in the study's row order.
pub fn replicate(spec: &DgpSpec, cs: &[f64], fit_opts: &OptimOptions, seed: u64) -> Result<Vec<Estimate>> {
    let (data, _) = generate(spec, seed)?;
    let opts = OptimOptions { seed, ..*fit_opts };
    match spec.kind() {
        OutcomeKind::Continuous => {
            let fit = fit_continuous(&data, &opts)?;
            let mut out = Vec::with_capacity(2 * cs.len());
            for &c in cs {
                out.push(estimate_continuous(&fit, &data, EstimandKind::BenefitAbove, c)?);
                out.push(estimate_continuous(&fit, &data, EstimandKind::HarmAbove, c)?);
            }
            Ok(out)
        }
        OutcomeKind::Binary => {
            let fit = fit_binary(&data, &opts)?;
            Ok(vec![
                estimate_binary(&fit, &data, EstimandKind::Benefit)?,
                estimate_binary(&fit, &data, EstimandKind::Harm)?,
            ])
        }
    }
}

fn targets(spec: &DgpSpec, opts: &StudyOptions) -> Result<Vec<(EstimandKind, Option<f64>, TruthValue)>> {
    match spec.truth {
        TruthParams::Continuous(_) => {
            if opts.cs.is_empty() {
                return Err(Error::Input("continuous studies need at least one margin c".into()));
            }
            let mut out = Vec::new();
            for &c in &opts.cs {
                let t = true_rates(spec, Some(c), opts.truth_draws, opts.truth_seed)?;
                out.push((EstimandKind::BenefitAbove, Some(c), t.benefit));
                out.push((EstimandKind::HarmAbove, Some(c), t.harm));
            }
            Ok(out)
        }
        TruthParams::Binary(_) => {
            let t = true_rates(spec, None, opts.truth_draws, opts.truth_seed)?;
            Ok(vec![
                (EstimandKind::Benefit, None, t.benefit),
                (EstimandKind::Harm, None, t.harm),
            ])
        }
    }
}

/// Run `opts.reps` replications. Replication `i` uses the seed
/// `derive_seed(opts.seed, i)`, so results do not depend on scheduling.
pub fn run_study(spec: &DgpSpec, opts: &StudyOptions) -> Result<McReport> {
    if opts.reps == 0 {
        return Err(Error::Input("a study needs at least one replication".into()));
    }
    spec.validate()?;
    let targets = targets(spec, opts)?;
    let outcomes: Vec<Result<Vec<Estimate>>> = (0..opts.reps)
        .into_par_iter()
        .map(|i| replicate(spec, &opts.cs, &opts.fit, derive_seed(opts.seed, i as u64)))
        .collect();

    let mut failures = FailureCounts::default();
    let mut converged: Vec<Vec<Estimate>> = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(est) => converged.push(est),
            Err(Error::NonConvergence { .. }) => failures.non_convergence += 1,
            Err(Error::Identification(_)) => failures.identification += 1,
            Err(_) => failures.other += 1,
        }
    }
    if converged.is_empty() {
        return Err(Error::Study(format!(
            "all {} replications failed ({} non-convergent, {} unidentified, {} other)",
            opts.reps, failures.non_convergence, failures.identification, failures.other
        )));
    }

    let rows = targets
        .iter()
        .enumerate()
        .map(|(j, &(kind, c, truth))| {
            let values: Vec<f64> = converged.iter().map(|e| e[j].value).collect();
            let ses: Vec<f64> = converged.iter().map(|e| e[j].se).collect();
            let covered = converged.iter().filter(|e| e[j].covers(truth.value)).count();
            let m = mean(&values);
            let ese = (values.len() >= 2).then(|| {
                let ss = pairwise_sum(&values.iter().map(|v| (v - m) * (v - m)).collect::<Vec<_>>());
                (ss / (values.len() - 1) as f64).sqrt()
            });
            McRow {
                kind,
                c,
                true_value: truth.value,
                truth_mc_se: truth.mc_se,
                mean_estimate: m,
                mean_bias: m - truth.value,
                ase: mean(&ses),
                ese,
                coverage: covered as f64 / values.len() as f64,
            }
        })
        .collect();

    Ok(McReport {
        outcome_kind: spec.kind(),
        latent: spec.latent,
        n: spec.n,
        seed: opts.seed,
        reps_attempted: opts.reps,
        reps_converged: converged.len(),
        failures,
        rows,
    })
}
