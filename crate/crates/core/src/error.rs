use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The data handed to a fit or estimator is unusable as given.
    #[error("input error: {0}")]
    Input(String),

    /// A function evaluated during numerical differentiation was not finite.
    #[error("non-finite evaluation at probe point {probe:?}")]
    Evaluation { probe: Vec<f64> },

    /// The optimizer ran out of budget or the likelihood has no finite maximizer.
    #[error("optimizer did not converge: {reason} (best log-likelihood {loglik}, max |score| {max_score:e})")]
    NonConvergence {
        reason: String,
        loglik: f64,
        max_score: f64,
    },

    /// The curvature at the reported maximum is degenerate.
    #[error("identification failure: {0}")]
    Identification(String),

    /// Every replication of a Monte Carlo study failed.
    #[error("study failed: {0}")]
    Study(String),
}
