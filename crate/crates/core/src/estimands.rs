//! Plug-in estimators of benefit and harm rates with influence-function
//! standard errors.
//!
//! For an integrand `m(x; θ)` the estimate is `P_n m(X; θ̂)` over every
//! covariate row, and its influence function is
//! `−(P_n ∂m/∂θ)ᵀ (P_n ∂²ψ/∂θ∂θᵀ)⁻¹ ∂ψ/∂θ + m`. Scores are centered at
//! their sample mean so the influence values average to the estimate.

use serde::{Deserialize, Serialize};

use crate::data::{Arm, Dataset};
use crate::error::{Error, Result};
use crate::mle::{record_scores, FitResult, MIN_RCOND};
use crate::model::{BinaryParams, ContinuousParams, OutcomeKind, OutcomeModel};
use crate::numerics::diff::num_grad;
use crate::numerics::linalg::{spd_inverse, to_matrix};
use crate::numerics::{mean, pairwise_sum, variance};

/// Two-sided 97.5% standard normal quantile.
pub const Z_975: f64 = 1.959964;

/// Standard normal quantile for a two-sided interval of the given level.
/// Level 0.95 returns [`Z_975`] exactly so reports match the default intervals.
pub fn two_sided_z(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Input(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if level == 0.95 {
        return Ok(Z_975);
    }
    let normal = statrs::distribution::Normal::new(0.0, 1.0).expect("standard normal");
    Ok(statrs::distribution::ContinuousCDF::inverse_cdf(&normal, 0.5 + level / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimandKind {
    /// `P(Y₁ − Y₀ > c)`
    BenefitAbove,
    /// `P(Y₀ − Y₁ > c)`
    HarmAbove,
    /// `P(Y₀ = 0, Y₁ = 1)`
    Benefit,
    /// `P(Y₀ = 1, Y₁ = 0)`
    Harm,
}

impl EstimandKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimandKind::BenefitAbove => "TBR_c",
            EstimandKind::HarmAbove => "THR_c",
            EstimandKind::Benefit => "TBR",
            EstimandKind::Harm => "THR",
        }
    }

    pub fn outcome_kind(self) -> OutcomeKind {
        match self {
            EstimandKind::BenefitAbove | EstimandKind::HarmAbove => OutcomeKind::Continuous,
            EstimandKind::Benefit | EstimandKind::Harm => OutcomeKind::Binary,
        }
    }

    pub fn is_thresholded(self) -> bool {
        self.outcome_kind() == OutcomeKind::Continuous
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s {
            "TBR_c" => Ok(EstimandKind::BenefitAbove),
            "THR_c" => Ok(EstimandKind::HarmAbove),
            "TBR" => Ok(EstimandKind::Benefit),
            "THR" => Ok(EstimandKind::Harm),
            other => Err(Error::Input(format!("unknown estimand '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub kind: EstimandKind,
    /// Margin for thresholded kinds.
    pub c: Option<f64>,
    pub value: f64,
    pub se: f64,
    /// `value ± 1.959964·se`, not clamped.
    pub ci: (f64, f64),
    pub n: usize,
}

impl Estimate {
    fn new(kind: EstimandKind, c: Option<f64>, value: f64, se: f64, n: usize) -> Self {
        Self {
            kind,
            c,
            value,
            se,
            ci: (value - Z_975 * se, value + Z_975 * se),
            n,
        }
    }

    /// Interval `value ± z·se` at the given level.
    pub fn interval(&self, level: f64) -> Result<(f64, f64)> {
        let z = two_sided_z(level)?;
        Ok((self.value - z * self.se, self.value + z * self.se))
    }

    /// Confidence interval clipped to `[0, 1]` for display.
    pub fn display_ci(&self) -> (f64, f64) {
        (self.ci.0.clamp(0.0, 1.0), self.ci.1.clamp(0.0, 1.0))
    }

    pub fn covers(&self, truth: f64) -> bool {
        self.ci.0 <= truth && truth <= self.ci.1
    }

    /// Two-sided p-value for the hypothesis that the rate is zero.
    pub fn p_value_zero(&self) -> f64 {
        crate::mle::two_sided_p(if self.se > 0.0 { self.value / self.se } else { f64::NAN })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceDecomposition {
    /// `P_n ∂m/∂θ`
    pub m_bar_grad: Vec<f64>,
    /// `(P_n ∂²ψ/∂θ∂θᵀ)⁻¹`
    pub hess_inv: Vec<Vec<f64>>,
    pub per_record_influence: Vec<f64>,
    /// Per-record integrand values `m(X_i; θ̂)`.
    pub integrand: Vec<f64>,
    /// Per-record scores centered at their mean.
    pub centered_scores: Vec<Vec<f64>>,
}

impl InfluenceDecomposition {
    pub fn value(&self) -> f64 {
        mean(&self.integrand)
    }

    /// `Var̂(O) / n` from the influence values.
    pub fn variance(&self) -> f64 {
        variance(&self.per_record_influence) / self.per_record_influence.len() as f64
    }

    /// The same variance composed from its pieces:
    /// `aᵀSa − 2aᵀC + Var̂(m)` with `a = H⁻¹ P_n ∂m/∂θ`, `S` the score
    /// covariance and `C` the score–integrand covariance.
    pub fn variance_from_parts(&self) -> f64 {
        let d = self.m_bar_grad.len();
        let n = self.integrand.len();
        let a: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| self.hess_inv[i][j] * self.m_bar_grad[j]).sum())
            .collect();
        let m_bar = mean(&self.integrand);
        let proj: Vec<f64> = self
            .centered_scores
            .iter()
            .map(|s| a.iter().zip(s).map(|(x, y)| x * y).sum())
            .collect();
        let quad = pairwise_sum(&proj.iter().map(|v| v * v).collect::<Vec<_>>()) / n as f64;
        let cross = pairwise_sum(
            &proj
                .iter()
                .zip(&self.integrand)
                .map(|(v, m)| v * (m - m_bar))
                .collect::<Vec<_>>(),
        ) / n as f64;
        (quad - 2.0 * cross + variance(&self.integrand)) / n as f64
    }
}

fn check_fit_matches<M: OutcomeModel>(fit: &FitResult<M>, data: &Dataset) -> Result<()> {
    if fit.params.covariate_dim() != data.covariate_dim() {
        return Err(Error::Input(format!(
            "fit has {} covariates but the data has {}",
            fit.params.covariate_dim(),
            data.covariate_dim()
        )));
    }
    if !fit.converged {
        return Err(Error::NonConvergence {
            reason: "estimates need a converged fit".into(),
            loglik: fit.loglik,
            max_score: fit.max_score(),
        });
    }
    Ok(())
}

/// Plug-in mean of an integrand over every covariate row.
pub fn plugin_mean<M, F>(params: &M, data: &Dataset, integrand: &F) -> Result<f64>
where
    F: Fn(&M, &[f64]) -> Result<f64>,
{
    let values = data
        .covariate_rows()
        .map(|x| integrand(params, x))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean(&values))
}

/// Influence-function pieces for `P_n m(X; θ̂)`.
pub fn influence_decomposition<M, F>(
    fit: &FitResult<M>,
    data: &Dataset,
    integrand: F,
) -> Result<InfluenceDecomposition>
where
    M: OutcomeModel,
    F: Fn(&M, &[f64]) -> Result<f64>,
{
    check_fit_matches(fit, data)?;
    let p = data.covariate_dim();
    let integrand_values = data
        .covariate_rows()
        .map(|x| integrand(&fit.params, x))
        .collect::<Result<Vec<f64>>>()?;
    let m_bar_grad = num_grad(
        |t: &[f64]| match M::from_theta(p, t) {
            Ok(m) => plugin_mean(&m, data, &integrand).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        },
        &fit.params.theta(),
    )?;
    let neg_inv = spd_inverse(&(-to_matrix(&fit.hessian)), MIN_RCOND, "mean Hessian")?;
    let d = m_bar_grad.len();
    let hess_inv: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| -neg_inv[(i, j)]).collect()).collect();

    let scores = record_scores(&fit.params, data);
    let score_mean: Vec<f64> = (0..d)
        .map(|j| mean(&scores.iter().map(|s| s[j]).collect::<Vec<_>>()))
        .collect();
    let centered_scores: Vec<Vec<f64>> = scores
        .into_iter()
        .map(|s| s.iter().zip(&score_mean).map(|(a, b)| a - b).collect())
        .collect();
    // a = H⁻¹ P_n ∂m/∂θ, so the influence value is m_i − aᵀ s_i.
    let a: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|j| hess_inv[i][j] * m_bar_grad[j]).sum())
        .collect();
    let per_record_influence = centered_scores
        .iter()
        .zip(&integrand_values)
        .map(|(s, m)| m - a.iter().zip(s).map(|(x, y)| x * y).sum::<f64>())
        .collect();
    Ok(InfluenceDecomposition {
        m_bar_grad,
        hess_inv,
        per_record_influence,
        integrand: integrand_values,
        centered_scores,
    })
}

fn estimate_with<M, F>(
    fit: &FitResult<M>,
    data: &Dataset,
    kind: EstimandKind,
    c: Option<f64>,
    integrand: F,
) -> Result<Estimate>
where
    M: OutcomeModel,
    F: Fn(&M, &[f64]) -> Result<f64>,
{
    let dec = influence_decomposition(fit, data, integrand)?;
    let se = dec.variance().max(0.0).sqrt();
    Ok(Estimate::new(kind, c, dec.value(), se, data.len()))
}

/// Integrand of a thresholded continuous estimand.
pub fn continuous_integrand(kind: EstimandKind, c: f64) -> Result<impl Fn(&ContinuousParams, &[f64]) -> Result<f64>> {
    if !c.is_finite() {
        return Err(Error::Domain(format!("margin c must be finite, got {c}")));
    }
    let benefit = match kind {
        EstimandKind::BenefitAbove => true,
        EstimandKind::HarmAbove => false,
        other => {
            return Err(Error::Domain(format!(
                "{} is not a continuous-outcome estimand",
                other.label()
            )))
        }
    };
    Ok(move |m: &ContinuousParams, x: &[f64]| {
        Ok(if benefit {
            m.benefit_prob(x, c)
        } else {
            m.harm_prob(x, c)
        })
    })
}

pub fn estimate_continuous(
    fit: &FitResult<ContinuousParams>,
    data: &Dataset,
    kind: EstimandKind,
    c: f64,
) -> Result<Estimate> {
    let integrand = continuous_integrand(kind, c)?;
    estimate_with(fit, data, kind, Some(c), integrand)
}

pub fn binary_integrand(kind: EstimandKind) -> Result<fn(&BinaryParams, &[f64]) -> Result<f64>> {
    match kind {
        EstimandKind::Benefit => Ok(|m: &BinaryParams, x: &[f64]| m.g01(x)),
        EstimandKind::Harm => Ok(|m: &BinaryParams, x: &[f64]| m.g10(x)),
        other => Err(Error::Domain(format!(
            "{} is not a binary-outcome estimand",
            other.label()
        ))),
    }
}

pub fn estimate_binary(
    fit: &FitResult<BinaryParams>,
    data: &Dataset,
    kind: EstimandKind,
) -> Result<Estimate> {
    let integrand = binary_integrand(kind)?;
    estimate_with(fit, data, kind, None, integrand)
}

/// Plug-in average treatment effect `P_n[G(X; θ̂₁) − G(X; θ̂₀)]`.
pub fn plugin_ate(params: &BinaryParams, data: &Dataset) -> f64 {
    let diffs: Vec<f64> = data
        .covariate_rows()
        .map(|x| params.success_prob(Arm::Treated, x) - params.success_prob(Arm::Control, x))
        .collect();
    mean(&diffs)
}

/// One `(TBR_c, THR_c)` pair per margin.
pub fn c_sweep(
    fit: &FitResult<ContinuousParams>,
    data: &Dataset,
    cs: &[f64],
) -> Result<Vec<(Estimate, Estimate)>> {
    cs.iter()
        .map(|&c| {
            Ok((
                estimate_continuous(fit, data, EstimandKind::BenefitAbove, c)?,
                estimate_continuous(fit, data, EstimandKind::HarmAbove, c)?,
            ))
        })
        .collect()
}
