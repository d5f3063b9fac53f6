//! Maximum-likelihood fitting of the outcome models and Wald diagnostics.
//!
//! The fit maximizes the mean log-likelihood with BFGS (variances on the log
//! scale), puts the latent loadings in canonical sign form, then polishes
//! with Newton steps in the original parameterization so the reported score
//! is essentially zero. The Hessian is the Jacobian of the analytic mean
//! score, and `param_cov = (−hessian·n)⁻¹`; the estimands module uses the
//! same mean Hessian in its influence functions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::{Arm, Dataset};
use crate::error::{Error, Result};
use crate::model::{ArmCoefs, BinaryParams, ContinuousParams, OutcomeModel};
use crate::numerics::diff::{num_jacobian, symmetrize};
use crate::numerics::linalg::{reciprocal_condition, spd_inverse, to_matrix};
use crate::numerics::normal::std_normal_cdf;
use crate::numerics::optimize::{maximize, Objective, OptimOptions};
use crate::numerics::pairwise_sum;

/// Reciprocal condition number of `−hessian` below which a fit is rejected.
pub const MIN_RCOND: f64 = 1e-10;
/// Optima within this much total log-likelihood of the best count as ties.
pub const MULTIPLICITY_TOLERANCE: f64 = 1e-4;
/// Coefficients beyond this magnitude indicate a likelihood that keeps
/// increasing towards infinity (separation or a flat ridge).
pub const DIVERGENCE_BOUND: f64 = 1e3;

const Z_975: f64 = 1.959964;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<M> {
    /// Canonical sign form.
    pub params: M,
    /// Total log-likelihood.
    pub loglik: f64,
    /// Mean per-record score at `params`.
    pub score: Vec<f64>,
    /// Mean per-record Hessian at `params`.
    pub hessian: Vec<Vec<f64>>,
    pub param_cov: Vec<Vec<f64>>,
    pub converged: bool,
    pub n_used: [usize; 2],
    pub iterations: usize,
    /// Other canonical optima found by restarts whose log-likelihood ties
    /// with the best one.
    pub alternative_optima: Vec<M>,
}

impl<M: OutcomeModel> FitResult<M> {
    pub fn n(&self) -> usize {
        self.n_used[0] + self.n_used[1]
    }

    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.param_cov.len())
            .map(|i| self.param_cov[i][i].max(0.0).sqrt())
            .collect()
    }

    pub fn max_score(&self) -> f64 {
        self.score.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Model-specific pieces of the fitting procedure.
pub trait Fittable: OutcomeModel {
    /// Positions in `theta()` that hold variances.
    fn variance_slots(p: usize) -> Vec<usize>;

    /// Data checks beyond non-empty arms.
    fn check_data(data: &Dataset) -> Result<()>;

    fn initial(data: &Dataset) -> Result<Self>;
}

/// Mean log-likelihood and mean score.
pub fn mean_score<M: OutcomeModel>(model: &M, data: &Dataset) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; model.dim()];
    let mut total = 0.0;
    for rec in data.records() {
        total += model.accumulate_score(&rec, &mut grad);
    }
    let n = data.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    (total / n, grad)
}

pub fn mean_log_lik<M: OutcomeModel>(model: &M, data: &Dataset) -> f64 {
    let terms: Vec<f64> = data.records().map(|r| model.record_log_lik(&r)).collect();
    pairwise_sum(&terms) / data.len() as f64
}

/// Per-record score vectors, one row per record.
pub fn record_scores<M: OutcomeModel>(model: &M, data: &Dataset) -> Vec<Vec<f64>> {
    data.records().map(|r| model.record_score(&r)).collect()
}

/// Mean Hessian from central differences of the analytic mean score.
pub fn mean_hessian<M: OutcomeModel>(model: &M, data: &Dataset) -> Result<Vec<Vec<f64>>> {
    let p = model.covariate_dim();
    let score = |t: &[f64]| match M::from_theta(p, t) {
        Ok(m) => mean_score(&m, data).1,
        Err(_) => vec![f64::NAN; t.len()],
    };
    let mut h = num_jacobian(score, &model.theta())?;
    symmetrize(&mut h);
    Ok(h)
}

/// Mean log-likelihood in the unconstrained parameterization.
struct FreeObjective<'a, M> {
    data: &'a Dataset,
    p: usize,
    log_slots: Vec<usize>,
    _model: std::marker::PhantomData<M>,
}

impl<M: OutcomeModel> FreeObjective<'_, M> {
    fn to_free(&self, theta: &[f64]) -> Vec<f64> {
        let mut u = theta.to_vec();
        for &i in &self.log_slots {
            u[i] = u[i].ln();
        }
        u
    }

    fn to_model(&self, u: &[f64]) -> Option<M> {
        let mut theta = u.to_vec();
        for &i in &self.log_slots {
            theta[i] = theta[i].exp();
        }
        M::from_theta(self.p, &theta).ok()
    }
}

impl<M: OutcomeModel> Objective for FreeObjective<'_, M> {
    fn value(&self, u: &[f64]) -> f64 {
        match self.to_model(u) {
            Some(m) => mean_score(&m, self.data).0,
            None => f64::NAN,
        }
    }

    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        self.value_and_gradient(u).1
    }

    fn value_and_gradient(&self, u: &[f64]) -> (f64, Option<Vec<f64>>) {
        let Some(m) = self.to_model(u) else {
            return (f64::NAN, None);
        };
        let (v, mut g) = mean_score(&m, self.data);
        for &i in &self.log_slots {
            g[i] *= u[i].exp();
        }
        (v, Some(g))
    }
}

fn check_arms<M: OutcomeModel>(data: &Dataset) -> Result<[usize; 2]> {
    let counts = data.arm_counts();
    let need = M::arm_dim(data.covariate_dim());
    for arm in Arm::BOTH {
        let n = counts[arm.index()];
        if n == 0 {
            return Err(Error::Input(format!("arm {} has no records", arm.index())));
        }
        if n <= need {
            return Err(Error::Input(format!(
                "arm {} has {n} records but the model needs more than {need}",
                arm.index()
            )));
        }
    }
    Ok(counts)
}

/// Newton iterations on the mean log-likelihood with step halving.
fn newton_polish<M: OutcomeModel>(start: M, data: &Dataset, tol: f64) -> Result<M> {
    let p = start.covariate_dim();
    let mut model = start;
    let mut value = mean_log_lik(&model, data);
    for _ in 0..20 {
        let (_, g) = mean_score(&model, data);
        if g.iter().all(|v| v.abs() <= tol * 1e-3) {
            break;
        }
        let h = mean_hessian(&model, data)?;
        let neg_h = -to_matrix(&h);
        let Some(chol) = neg_h.cholesky() else { break };
        let step = chol.solve(&DVector::from_vec(g));
        let theta = model.theta();
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + scale * s).collect();
            if let Ok(m) = M::from_theta(p, &trial) {
                let v = mean_log_lik(&m, data);
                if v.is_finite() && v >= value - 1e-15 * value.abs() {
                    accepted = Some((m, v));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((m, v)) = accepted else { break };
        let moved = step.iter().fold(0.0_f64, |a, s| a.max((scale * s).abs()));
        model = m;
        value = v;
        if moved < 1e-14 {
            break;
        }
    }
    Ok(model)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Fit any [`Fittable`] model by maximum likelihood.
pub fn fit<M: Fittable>(data: &Dataset, opts: &OptimOptions) -> Result<FitResult<M>> {
    opts.validate()?;
    let n_used = check_arms::<M>(data)?;
    M::check_data(data)?;
    let p = data.covariate_dim();
    let init = M::initial(data)?;
    let objective = FreeObjective::<M> {
        data,
        p,
        log_slots: M::variance_slots(p),
        _model: std::marker::PhantomData,
    };
    let start = objective.to_free(&init.theta());
    let max = maximize(&objective, &start, opts)?;

    let canonical = |u: &[f64]| {
        objective.to_model(u).map(|mut m| {
            m.canonicalize();
            m
        })
    };
    let best = canonical(&max.theta).ok_or_else(|| Error::NonConvergence {
        reason: "optimizer ended outside the parameter space".into(),
        loglik: f64::NAN,
        max_score: f64::NAN,
    })?;
    let diverged = |m: &M| m.theta().iter().any(|v| v.abs() > DIVERGENCE_BOUND);
    if diverged(&best) {
        let (ll, g) = mean_score(&best, data);
        return Err(Error::NonConvergence {
            reason: "coefficients diverge; the likelihood has no finite maximizer".into(),
            loglik: ll * data.len() as f64,
            max_score: g.iter().fold(0.0, |m, v| m.max(v.abs())),
        });
    }

    let params = newton_polish(best, data, opts.gradient_tolerance)?;
    let (mean_ll, score) = mean_score(&params, data);
    let max_score = score.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let nf = data.len() as f64;
    let loglik = params.log_likelihood(data);
    if !(max_score <= opts.gradient_tolerance) || !mean_ll.is_finite() {
        return Err(Error::NonConvergence {
            reason: format!(
                "score norm {max_score:e} exceeds tolerance {:e} after {} restarts",
                opts.gradient_tolerance, opts.restarts
            ),
            loglik,
            max_score,
        });
    }

    let hessian = mean_hessian(&params, data)?;
    let info = -to_matrix(&hessian) * nf;
    let cov = spd_inverse(&info, MIN_RCOND, "observed information")?;
    let param_cov: Vec<Vec<f64>> = (0..cov.nrows())
        .map(|i| (0..cov.ncols()).map(|j| cov[(i, j)]).collect())
        .collect();

    let best_theta = params.theta();
    let mut alternative_optima: Vec<M> = Vec::new();
    for run in &max.runs {
        if !run.converged || (max.value - run.value) * nf > MULTIPLICITY_TOLERANCE {
            continue;
        }
        let Some(m) = canonical(&run.theta) else { continue };
        let theta = m.theta();
        let distinct = max_abs_diff(&theta, &best_theta) > 1e-3
            && alternative_optima
                .iter()
                .all(|o| max_abs_diff(&o.theta(), &theta) > 1e-3);
        if distinct {
            alternative_optima.push(m);
        }
    }

    Ok(FitResult {
        params,
        loglik,
        score,
        hessian,
        param_cov,
        converged: true,
        n_used,
        iterations: max.iterations,
        alternative_optima,
    })
}

pub fn fit_continuous(data: &Dataset, opts: &OptimOptions) -> Result<FitResult<ContinuousParams>> {
    fit(data, opts)
}

pub fn fit_binary(data: &Dataset, opts: &OptimOptions) -> Result<FitResult<BinaryParams>> {
    fit(data, opts)
}

/// Fitting options used by the study driver and the CLI unless overridden.
pub fn default_fit_options() -> OptimOptions {
    OptimOptions {
        max_iterations: 1000,
        gradient_tolerance: 1e-6,
        step_tolerance: 1e-12,
        restarts: 2,
        jitter: 0.3,
        seed: 0,
    }
}

const INITIAL_LOADING: f64 = 0.1;

/// Least-squares coefficients of `y` on `[1, x]`, and the residual variance.
fn least_squares(rows: &[(&[f64], f64)], p: usize) -> Result<(Vec<f64>, f64)> {
    let n = rows.len();
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { rows[i].0[j - 1] });
    let y = DVector::from_iterator(n, rows.iter().map(|r| r.1));
    let gram = design.transpose() * &design;
    if reciprocal_condition(&gram) < 1e-12 {
        return Err(Error::Identification(
            "covariates are collinear within an arm".into(),
        ));
    }
    let beta = gram
        .cholesky()
        .ok_or_else(|| Error::Identification("covariates are collinear within an arm".into()))?
        .solve(&(design.transpose() * &y));
    let resid = &y - &design * &beta;
    let var = resid.dot(&resid) / n as f64;
    Ok((beta.iter().cloned().collect(), var))
}

fn arm_rows(data: &Dataset, arm: Arm) -> Vec<(&[f64], f64)> {
    data.records()
        .filter(|r| r.arm == arm)
        .map(|r| (r.covariates, r.outcome))
        .collect()
}

impl Fittable for ContinuousParams {
    fn variance_slots(p: usize) -> Vec<usize> {
        let d = Self::arm_dim(p);
        vec![d - 1, 2 * d - 1]
    }

    fn check_data(_data: &Dataset) -> Result<()> {
        Ok(())
    }

    fn initial(data: &Dataset) -> Result<Self> {
        let p = data.covariate_dim();
        let mut arms = Vec::new();
        let mut vars = [0.0; 2];
        for arm in Arm::BOTH {
            let (beta, var) = least_squares(&arm_rows(data, arm), p)?;
            if !(var > 0.0) {
                return Err(Error::Identification(format!(
                    "outcomes in arm {} are an exact linear function of the covariates",
                    arm.index()
                )));
            }
            vars[arm.index()] = (var - INITIAL_LOADING * INITIAL_LOADING).max(0.5 * var);
            arms.push(ArmCoefs::new(beta[0], beta[1..].to_vec(), INITIAL_LOADING, vec![0.0; p])?);
        }
        let treated = arms.pop().expect("two arms");
        let control = arms.pop().expect("two arms");
        ContinuousParams::new(control, treated, vars)
    }
}

/// Probit log-likelihood of one arm with no latent loading.
struct ArmProbit<'a> {
    rows: Vec<(&'a [f64], f64)>,
}

impl Objective for ArmProbit<'_> {
    fn value(&self, beta: &[f64]) -> f64 {
        self.value_and_gradient(beta).0
    }

    fn gradient(&self, beta: &[f64]) -> Option<Vec<f64>> {
        self.value_and_gradient(beta).1
    }

    fn value_and_gradient(&self, beta: &[f64]) -> (f64, Option<Vec<f64>>) {
        let mut grad = vec![0.0; beta.len()];
        let mut total = 0.0;
        for (x, y) in &self.rows {
            let z = beta[0] + crate::model::dot(&beta[1..], x);
            let (sign, s) = if *y == 1.0 { (1.0, z) } else { (-1.0, -z) };
            total += std_normal_cdf(s).ln();
            let d = sign * crate::numerics::normal::inverse_mills(s);
            grad[0] += d;
            for j in 0..x.len() {
                grad[j + 1] += d * x[j];
            }
        }
        let n = self.rows.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (total / n, Some(grad))
    }
}

impl Fittable for BinaryParams {
    fn variance_slots(_p: usize) -> Vec<usize> {
        Vec::new()
    }

    fn check_data(data: &Dataset) -> Result<()> {
        data.require_binary_outcomes()?;
        for arm in Arm::BOTH {
            let rows = arm_rows(data, arm);
            let ones = rows.iter().filter(|r| r.1 == 1.0).count();
            if ones == 0 || ones == rows.len() {
                return Err(Error::NonConvergence {
                    reason: format!(
                        "every outcome in arm {} is {}; the likelihood increases without bound",
                        arm.index(),
                        if ones == 0 { 0 } else { 1 }
                    ),
                    loglik: 0.0,
                    max_score: f64::NAN,
                });
            }
        }
        Ok(())
    }

    fn initial(data: &Dataset) -> Result<Self> {
        let p = data.covariate_dim();
        let opts = OptimOptions {
            max_iterations: 200,
            ..OptimOptions::default()
        };
        let mut arms = Vec::new();
        for arm in Arm::BOTH {
            let probit = ArmProbit {
                rows: arm_rows(data, arm),
            };
            let fit = maximize(&probit, &vec![0.0; p + 1], &opts)?;
            let beta: Vec<f64> = fit
                .theta
                .iter()
                .map(|b| b.clamp(-DIVERGENCE_BOUND, DIVERGENCE_BOUND))
                .collect();
            arms.push(ArmCoefs::new(beta[0], beta[1..].to_vec(), INITIAL_LOADING, vec![0.0; p])?);
        }
        let treated = arms.pop().expect("two arms");
        let control = arms.pop().expect("two arms");
        BinaryParams::new(control, treated)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldEntry {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
    pub p_value: f64,
    pub ci: (f64, f64),
}

impl WaldEntry {
    pub fn new(name: impl Into<String>, estimate: f64, se: f64) -> Self {
        let z = if se > 0.0 { estimate / se } else { f64::NAN };
        Self {
            name: name.into(),
            estimate,
            se,
            z,
            p_value: two_sided_p(z),
            ci: (estimate - Z_975 * se, estimate + Z_975 * se),
        }
    }

    pub fn interval(&self, level: f64) -> Result<(f64, f64)> {
        let z = crate::estimands::two_sided_z(level)?;
        Ok((self.estimate - z * self.se, self.estimate + z * self.se))
    }
}

pub fn two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    (2.0 * std_normal_cdf(-z.abs())).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointWald {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldReport {
    /// Latent loading and interaction coefficients of both arms.
    pub entries: Vec<WaldEntry>,
    /// Joint test that every interaction coefficient is zero.
    pub interactions: JointWald,
}

/// Positions of `(loading, interactions)` for one arm in `theta()`.
pub fn loading_slots<M: OutcomeModel>(p: usize, arm: Arm) -> (usize, Vec<usize>) {
    let base = arm.index() * M::arm_dim(p);
    (base + p + 1, (base + p + 2..base + 2 * p + 2).collect())
}

pub fn wald_tests<M: OutcomeModel>(fit: &FitResult<M>) -> Result<WaldReport> {
    let p = fit.params.covariate_dim();
    let cov = to_matrix(&fit.param_cov);
    if !fit.converged {
        return Err(Error::NonConvergence {
            reason: "Wald tests need a converged fit".into(),
            loglik: fit.loglik,
            max_score: fit.max_score(),
        });
    }
    spd_inverse(&cov, 0.0, "parameter covariance")?;
    let theta = fit.params.theta();
    let names = M::theta_names(p);
    let se = fit.std_errors();
    let mut entries = Vec::new();
    let mut inter = Vec::new();
    for arm in Arm::BOTH {
        let (l, ints) = loading_slots::<M>(p, arm);
        for i in std::iter::once(l).chain(ints.iter().copied()) {
            entries.push(WaldEntry::new(names[i].clone(), theta[i], se[i]));
        }
        inter.extend(ints);
    }
    let sub = DMatrix::from_fn(inter.len(), inter.len(), |i, j| cov[(inter[i], inter[j])]);
    let sub_inv = spd_inverse(&sub, 0.0, "interaction covariance")?;
    let b = DVector::from_iterator(inter.len(), inter.iter().map(|&i| theta[i]));
    let statistic = (b.transpose() * sub_inv * &b)[(0, 0)];
    let df = inter.len();
    let p_value = if df == 0 {
        1.0
    } else {
        ChiSquared::new(df as f64)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sf(statistic)
    };
    Ok(WaldReport {
        entries,
        interactions: JointWald {
            statistic,
            df,
            p_value,
        },
    })
}
