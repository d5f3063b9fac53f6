//! Binary outcomes: `Y_t = 1{a_t(X) + h_t(X)·U + ε_t > 0}` with standard
//! normal `ε_t` and `U`, so `P(Y_t = 1 | X) = Φ(a_t / √(1 + h_t²))`.

use serde::{Deserialize, Serialize};

use super::{
    add_coef_gradient, check_finite_record, check_theta_len, coef_names, ArmCoefs, OutcomeKind,
    OutcomeModel,
};
use crate::data::{Arm, DatasetRecord};
use crate::error::{Error, Result};
use crate::numerics::bvn::{bvn_rect, Rect2};
use crate::numerics::normal::{inverse_mills, std_normal_cdf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryParams {
    pub arms: [ArmCoefs; 2],
}

impl BinaryParams {
    pub fn new(control: ArmCoefs, treated: ArmCoefs) -> Result<Self> {
        if control.covariate_dim() != treated.covariate_dim() {
            return Err(Error::Domain("arms have different covariate dimensions".into()));
        }
        Ok(Self {
            arms: [control, treated],
        })
    }

    fn probit_index(&self, arm: Arm, x: &[f64]) -> f64 {
        let c = &self.arms[arm.index()];
        let h = c.loading_at(x);
        c.location(x) / (1.0 + h * h).sqrt()
    }

    /// `P(Y_t = 1 | X = x)`.
    pub fn success_prob(&self, arm: Arm, x: &[f64]) -> f64 {
        std_normal_cdf(self.probit_index(arm, x))
    }

    /// Bernoulli log-likelihood of the record, with `−∞` when the fitted
    /// probability of the observed outcome underflows to zero.
    pub fn log_likelihood_term(&self, rec: &DatasetRecord) -> Result<f64> {
        check_finite_record(self.covariate_dim(), rec)?;
        if rec.outcome != 0.0 && rec.outcome != 1.0 {
            return Err(Error::Domain(format!(
                "binary outcome must be 0 or 1, got {}",
                rec.outcome
            )));
        }
        Ok(self.record_log_lik(rec))
    }

    /// Mean vector and covariance of `(−Y₀*, −Y₁*)` given `X = x`.
    pub fn latent_moments(&self, x: &[f64]) -> ([f64; 2], [[f64; 2]; 2]) {
        let [a0, a1] = &self.arms;
        let (h0, h1) = (a0.loading_at(x), a1.loading_at(x));
        let mu = [-a0.location(x), -a1.location(x)];
        let cross = h0 * h1;
        (mu, [[1.0 + h0 * h0, cross], [cross, 1.0 + h1 * h1]])
    }

    /// `P(Y₀ = 0, Y₁ = 1 | X = x)`.
    pub fn g01(&self, x: &[f64]) -> Result<f64> {
        let (mu, sigma) = self.latent_moments(x);
        bvn_rect(&Rect2::upper_left_quadrant(), mu, sigma)
    }

    /// `P(Y₀ = 1, Y₁ = 0 | X = x)`.
    pub fn g10(&self, x: &[f64]) -> Result<f64> {
        let (mu, sigma) = self.latent_moments(x);
        bvn_rect(&Rect2::lower_right_quadrant(), mu, sigma)
    }
}

impl OutcomeModel for BinaryParams {
    const KIND: OutcomeKind = OutcomeKind::Binary;

    fn arm_dim(p: usize) -> usize {
        2 * p + 2
    }

    fn covariate_dim(&self) -> usize {
        self.arms[0].covariate_dim()
    }

    fn arm(&self, arm: Arm) -> &ArmCoefs {
        &self.arms[arm.index()]
    }

    fn theta(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for arm in &self.arms {
            arm.push_to(&mut out);
        }
        out
    }

    fn from_theta(p: usize, theta: &[f64]) -> Result<Self> {
        let d = Self::arm_dim(p);
        check_theta_len(2 * d, theta)?;
        Self::new(
            ArmCoefs::read_from(p, theta),
            ArmCoefs::read_from(p, &theta[d..]),
        )
    }

    fn record_log_lik(&self, rec: &DatasetRecord) -> f64 {
        let z = self.probit_index(rec.arm, rec.covariates);
        let signed = if rec.outcome == 1.0 { z } else { -z };
        std_normal_cdf(signed).ln()
    }

    fn accumulate_score(&self, rec: &DatasetRecord, grad: &mut [f64]) -> f64 {
        let t = rec.arm.index();
        let x = rec.covariates;
        let coefs = &self.arms[t];
        let a = coefs.location(x);
        let h = coefs.loading_at(x);
        let s2 = 1.0 + h * h;
        let s = s2.sqrt();
        let z = a / s;
        let (sign, signed) = if rec.outcome == 1.0 { (1.0, z) } else { (-1.0, -z) };
        let d_z = sign * inverse_mills(signed);
        let d = Self::arm_dim(x.len());
        add_coef_gradient(&mut grad[t * d..(t + 1) * d], x, d_z / s, -d_z * a * h / (s2 * s));
        std_normal_cdf(signed).ln()
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
        }
        out
    }
}
