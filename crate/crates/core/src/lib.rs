//! Estimation of treatment benefit and harm rates from randomized trials
//! under latent-variable outcome models.
//!
//! Continuous outcomes follow `Y_t = a_t(X) + h_t(X)·U + ε_t` and binary
//! outcomes threshold the same latent structure. Fitting is by maximum
//! likelihood ([`mle`]); the rates `P(Y₁ − Y₀ > c)`, `P(Y₀ − Y₁ > c)`,
//! `P(Y₀ = 0, Y₁ = 1)` and `P(Y₀ = 1, Y₁ = 0)` are plug-in averages with
//! influence-function standard errors ([`estimands`]).

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod estimands;
pub mod mle;
pub mod model;
pub mod numerics;
pub mod simulation;

pub use data::{Arm, Dataset, DatasetRecord};
pub use error::{Error, Result};
pub use estimands::{c_sweep, estimate_binary, estimate_continuous, Estimate, EstimandKind};
pub use mle::{fit_binary, fit_continuous, wald_tests, FitResult, WaldReport};
pub use model::{ArmCoefs, BinaryParams, ContinuousParams, OutcomeKind, OutcomeModel};
pub use numerics::optimize::OptimOptions;
pub use simulation::{generate, run_study, DgpSpec, LatentDist, McReport, StudyOptions};
