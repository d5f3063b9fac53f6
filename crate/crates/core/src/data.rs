//! Observed trial data: one record per subject with arm, covariates and outcome.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Treatment assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    Control = 0,
    Treated = 1,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Control, Arm::Treated];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_indicator(t: u8) -> Result<Self> {
        match t {
            0 => Ok(Arm::Control),
            1 => Ok(Arm::Treated),
            other => Err(Error::Input(format!("treatment indicator must be 0 or 1, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetRecord<'a> {
    pub arm: Arm,
    pub covariates: &'a [f64],
    pub outcome: f64,
}

/// Column-compact storage of `n` records with `p` covariates each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    p: usize,
    arms: Vec<Arm>,
    covariates: Vec<f64>,
    outcomes: Vec<f64>,
}

impl Dataset {
    pub fn new(p: usize) -> Self {
        Self {
            p,
            arms: Vec::new(),
            covariates: Vec::new(),
            outcomes: Vec::new(),
        }
    }

    pub fn with_capacity(p: usize, n: usize) -> Self {
        Self {
            p,
            arms: Vec::with_capacity(n),
            covariates: Vec::with_capacity(n * p),
            outcomes: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, arm: Arm, covariates: &[f64], outcome: f64) -> Result<()> {
        if covariates.len() != self.p {
            return Err(Error::Input(format!(
                "record {} has {} covariates, expected {}",
                self.len(),
                covariates.len(),
                self.p
            )));
        }
        if let Some(j) = covariates.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "record {} covariate {j} is not finite",
                self.len()
            )));
        }
        if !outcome.is_finite() {
            return Err(Error::Input(format!("record {} outcome is not finite", self.len())));
        }
        self.arms.push(arm);
        self.covariates.extend_from_slice(covariates);
        self.outcomes.push(outcome);
        Ok(())
    }

    pub fn covariate_dim(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn record(&self, i: usize) -> DatasetRecord<'_> {
        DatasetRecord {
            arm: self.arms[i],
            covariates: self.covariates_of(i),
            outcome: self.outcomes[i],
        }
    }

    pub fn covariates_of(&self, i: usize) -> &[f64] {
        &self.covariates[i * self.p..(i + 1) * self.p]
    }

    pub fn records(&self) -> impl ExactSizeIterator<Item = DatasetRecord<'_>> + '_ {
        (0..self.len()).map(move |i| self.record(i))
    }

    /// Covariate rows of every subject, regardless of arm.
    pub fn covariate_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.covariates_of(i))
    }

    pub fn arm_counts(&self) -> [usize; 2] {
        let treated = self.arms.iter().filter(|a| **a == Arm::Treated).count();
        [self.len() - treated, treated]
    }

    /// Checks that every outcome is 0 or 1.
    pub fn require_binary_outcomes(&self) -> Result<()> {
        match self.outcomes.iter().position(|&y| y != 0.0 && y != 1.0) {
            Some(i) => Err(Error::Input(format!(
                "record {i} has outcome {} but binary outcomes must be 0 or 1",
                self.outcomes[i]
            ))),
            None => Ok(()),
        }
    }

    /// New dataset made of the given rows, in the given order (rows may repeat).
    pub fn select(&self, rows: &[usize]) -> Dataset {
        let mut out = Dataset::with_capacity(self.p, rows.len());
        for &i in rows {
            out.arms.push(self.arms[i]);
            out.covariates.extend_from_slice(self.covariates_of(i));
            out.outcomes.push(self.outcomes[i]);
        }
        out
    }
}
