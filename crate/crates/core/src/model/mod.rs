//! Latent-variable outcome models.
//!
//! Both models share the arm structure `a_t(x) + h_t(x)·U + ε_t` with a
//! location `a_t(x) = α_{t,0} + α_{t,1}ᵀx` and a latent loading
//! `h_t(x) = α_{t,2} + α_{t,3}ᵀx`, where `U` has mean 0 and variance 1.

pub mod binary;
pub mod continuous;

use serde::{Deserialize, Serialize};

use crate::data::{Arm, Dataset, DatasetRecord};
use crate::error::{Error, Result};

pub use binary::BinaryParams;
pub use continuous::ContinuousParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeKind {
    Continuous,
    Binary,
}

impl OutcomeKind {
    pub fn name(self) -> &'static str {
        match self {
            OutcomeKind::Continuous => "continuous",
            OutcomeKind::Binary => "binary",
        }
    }
}

impl std::str::FromStr for OutcomeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "continuous" => Ok(OutcomeKind::Continuous),
            "binary" => Ok(OutcomeKind::Binary),
            other => Err(Error::Input(format!(
                "unknown outcome kind '{other}' (expected continuous or binary)"
            ))),
        }
    }
}

/// Coefficients of one arm: location and latent-loading parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmCoefs {
    pub intercept: f64,
    pub main: Vec<f64>,
    pub loading: f64,
    pub interaction: Vec<f64>,
}

impl ArmCoefs {
    pub fn zeros(p: usize) -> Self {
        Self {
            intercept: 0.0,
            main: vec![0.0; p],
            loading: 0.0,
            interaction: vec![0.0; p],
        }
    }

    pub fn new(intercept: f64, main: Vec<f64>, loading: f64, interaction: Vec<f64>) -> Result<Self> {
        if main.len() != interaction.len() {
            return Err(Error::Domain(format!(
                "main effects have length {} but interactions have length {}",
                main.len(),
                interaction.len()
            )));
        }
        Ok(Self {
            intercept,
            main,
            loading,
            interaction,
        })
    }

    pub fn covariate_dim(&self) -> usize {
        self.main.len()
    }

    /// `α_{t,0} + α_{t,1}ᵀx`
    pub fn location(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.main, x)
    }

    /// `α_{t,2} + α_{t,3}ᵀx`
    pub fn loading_at(&self, x: &[f64]) -> f64 {
        self.loading + dot(&self.interaction, x)
    }

    /// Jointly negate the latent loading and its interactions.
    pub fn flip_loading(&mut self) {
        self.loading = -self.loading;
        self.interaction.iter_mut().for_each(|v| *v = -*v);
    }

    pub fn has_interaction(&self) -> bool {
        self.interaction.iter().any(|&v| v != 0.0)
    }

    fn push_to(&self, out: &mut Vec<f64>) {
        out.push(self.intercept);
        out.extend_from_slice(&self.main);
        out.push(self.loading);
        out.extend_from_slice(&self.interaction);
    }

    fn read_from(p: usize, block: &[f64]) -> Self {
        Self {
            intercept: block[0],
            main: block[1..=p].to_vec(),
            loading: block[p + 1],
            interaction: block[p + 2..2 * p + 2].to_vec(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Add `d_loc·∂a/∂coef + d_load·∂h/∂coef` into a coefficient block laid out
/// as `[α0, α1(p), α2, α3(p)]`.
pub(crate) fn add_coef_gradient(block: &mut [f64], x: &[f64], d_loc: f64, d_load: f64) {
    let p = x.len();
    block[0] += d_loc;
    block[p + 1] += d_load;
    for j in 0..p {
        block[1 + j] += d_loc * x[j];
        block[p + 2 + j] += d_load * x[j];
    }
}

/// A parametric outcome model with a flat parameter vector made of two
/// arm blocks, control first.
pub trait OutcomeModel: Clone + Send + Sync + std::fmt::Debug {
    const KIND: OutcomeKind;

    /// Length of one arm's block for covariate dimension `p`.
    fn arm_dim(p: usize) -> usize;

    fn covariate_dim(&self) -> usize;

    fn arm(&self, arm: Arm) -> &ArmCoefs;

    fn theta(&self) -> Vec<f64>;

    fn from_theta(p: usize, theta: &[f64]) -> Result<Self>;

    /// Log-likelihood contribution of one record. May be `-∞` or NaN outside
    /// the parameter space.
    fn record_log_lik(&self, rec: &DatasetRecord) -> f64;

    /// Adds the record's score (gradient of its log-likelihood with respect
    /// to `theta()`) into `grad` and returns the log-likelihood term.
    fn accumulate_score(&self, rec: &DatasetRecord, grad: &mut [f64]) -> f64;

    /// Put each arm in the form with a non-negative latent loading.
    fn canonicalize(&mut self);

    /// Names of the entries of `theta()`.
    fn theta_names(p: usize) -> Vec<String>;

    fn dim(&self) -> usize {
        2 * Self::arm_dim(self.covariate_dim())
    }

    fn record_score(&self, rec: &DatasetRecord) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.accumulate_score(rec, &mut g);
        g
    }

    fn is_canonical(&self) -> bool {
        Arm::BOTH.iter().all(|&a| self.arm(a).loading >= 0.0)
    }

    /// Total log-likelihood over a dataset.
    fn log_likelihood(&self, data: &Dataset) -> f64 {
        let terms: Vec<f64> = data.records().map(|r| self.record_log_lik(&r)).collect();
        crate::numerics::pairwise_sum(&terms)
    }
}

pub(crate) fn coef_names(p: usize, arm: usize, out: &mut Vec<String>) {
    out.push(format!("arm{arm}.intercept"));
    for j in 0..p {
        out.push(format!("arm{arm}.main[{j}]"));
    }
    out.push(format!("arm{arm}.loading"));
    for j in 0..p {
        out.push(format!("arm{arm}.interaction[{j}]"));
    }
}

pub(crate) fn check_theta_len(expected: usize, theta: &[f64]) -> Result<()> {
    if theta.len() != expected {
        return Err(Error::Domain(format!(
            "parameter vector has length {}, expected {expected}",
            theta.len()
        )));
    }
    Ok(())
}

pub(crate) fn check_finite_record(p: usize, rec: &DatasetRecord) -> Result<()> {
    if rec.covariates.len() != p {
        return Err(Error::Domain(format!(
            "record has {} covariates, model expects {p}",
            rec.covariates.len()
        )));
    }
    if rec.covariates.iter().any(|v| !v.is_finite()) || !rec.outcome.is_finite() {
        return Err(Error::Domain("record has non-finite covariates or outcome".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coef_round_trip() {
        let a = ArmCoefs::new(0.5, vec![1.0, 2.0], -0.3, vec![0.1, 0.2]).unwrap();
        let mut v = Vec::new();
        a.push_to(&mut v);
        assert_eq!(v, vec![0.5, 1.0, 2.0, -0.3, 0.1, 0.2]);
        assert_eq!(ArmCoefs::read_from(2, &v), a);
        assert!((a.location(&[1.0, 1.0]) - 3.5).abs() < 1e-15);
        assert!((a.loading_at(&[1.0, 1.0]) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn kind_parses() {
        assert_eq!("Binary".parse::<OutcomeKind>().unwrap(), OutcomeKind::Binary);
        assert!("ordinal".parse::<OutcomeKind>().is_err());
    }
}
