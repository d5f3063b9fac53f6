//! Continuous outcomes: `Y_t = a_t(X) + h_t(X)·U + ε_t`, `ε_t ~ N(0, σ_t²)`.
//!
//! Marginalizing a normal `U` gives `Y_t | X ~ N(a_t(X), h_t(X)² + σ_t²)`.

use serde::{Deserialize, Serialize};

use super::{
    add_coef_gradient, check_finite_record, check_theta_len, coef_names, ArmCoefs, OutcomeKind,
    OutcomeModel,
};
use crate::data::{Arm, DatasetRecord};
use crate::error::{Error, Result};
use crate::numerics::normal::{normal_log_pdf, std_normal_cdf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousParams {
    pub arms: [ArmCoefs; 2],
    /// `σ_t²` per arm.
    pub noise_var: [f64; 2],
}

impl ContinuousParams {
    pub fn new(control: ArmCoefs, treated: ArmCoefs, noise_var: [f64; 2]) -> Result<Self> {
        if control.covariate_dim() != treated.covariate_dim() {
            return Err(Error::Domain("arms have different covariate dimensions".into()));
        }
        if !noise_var.iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!(
                "noise variances must be positive, got {noise_var:?}"
            )));
        }
        Ok(Self {
            arms: [control, treated],
            noise_var,
        })
    }

    /// Mean and variance of `Y_t | X = x`.
    pub fn outcome_moments(&self, arm: Arm, x: &[f64]) -> (f64, f64) {
        let c = &self.arms[arm.index()];
        let h = c.loading_at(x);
        (c.location(x), h * h + self.noise_var[arm.index()])
    }

    /// Log-density of the record's outcome under its arm's marginal law.
    pub fn log_density(&self, rec: &DatasetRecord) -> Result<f64> {
        check_finite_record(self.covariate_dim(), rec)?;
        Ok(self.record_log_lik(rec))
    }

    /// `P(Y₁ − Y₀ > c | X = x)`.
    pub fn benefit_prob(&self, x: &[f64], c: f64) -> f64 {
        let [a0, a1] = &self.arms;
        std_normal_cdf((a1.location(x) - a0.location(x) - c) / self.diff_sd(x))
    }

    /// `P(Y₀ − Y₁ > c | X = x)`.
    pub fn harm_prob(&self, x: &[f64], c: f64) -> f64 {
        let [a0, a1] = &self.arms;
        std_normal_cdf((a0.location(x) - a1.location(x) - c) / self.diff_sd(x))
    }

    /// Standard deviation of `Y₁ − Y₀` given `X = x`.
    fn diff_sd(&self, x: &[f64]) -> f64 {
        let [a0, a1] = &self.arms;
        let dh = a1.loading_at(x) - a0.loading_at(x);
        (dh * dh + self.noise_var[0] + self.noise_var[1]).sqrt()
    }
}

impl OutcomeModel for ContinuousParams {
    const KIND: OutcomeKind = OutcomeKind::Continuous;

    fn arm_dim(p: usize) -> usize {
        2 * p + 3
    }

    fn covariate_dim(&self) -> usize {
        self.arms[0].covariate_dim()
    }

    fn arm(&self, arm: Arm) -> &ArmCoefs {
        &self.arms[arm.index()]
    }

    fn theta(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for t in 0..2 {
            self.arms[t].push_to(&mut out);
            out.push(self.noise_var[t]);
        }
        out
    }

    fn from_theta(p: usize, theta: &[f64]) -> Result<Self> {
        let d = Self::arm_dim(p);
        check_theta_len(2 * d, theta)?;
        let arm = |t: usize| ArmCoefs::read_from(p, &theta[t * d..]);
        Self::new(arm(0), arm(1), [theta[d - 1], theta[2 * d - 1]])
    }

    fn record_log_lik(&self, rec: &DatasetRecord) -> f64 {
        let (mean, var) = self.outcome_moments(rec.arm, rec.covariates);
        normal_log_pdf(rec.outcome, mean, var)
    }

    fn accumulate_score(&self, rec: &DatasetRecord, grad: &mut [f64]) -> f64 {
        let t = rec.arm.index();
        let x = rec.covariates;
        let coefs = &self.arms[t];
        let h = coefs.loading_at(x);
        let var = h * h + self.noise_var[t];
        let r = rec.outcome - coefs.location(x);
        let d_var = (r * r - var) / (2.0 * var * var);
        let d = Self::arm_dim(x.len());
        let block = &mut grad[t * d..(t + 1) * d];
        add_coef_gradient(block, x, r / var, 2.0 * h * d_var);
        block[d - 1] += d_var;
        normal_log_pdf(rec.outcome, coefs.location(x), var)
    }

    fn canonicalize(&mut self) {
        for arm in &mut self.arms {
            if arm.loading < 0.0 {
                arm.flip_loading();
            }
        }
    }

    fn theta_names(p: usize) -> Vec<String> {
        let mut out = Vec::new();
        for t in 0..2 {
            coef_names(p, t, &mut out);
            out.push(format!("arm{t}.noise_var"));
        }
        out
    }
}
