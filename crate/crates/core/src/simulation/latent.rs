//! Standardized latent-variable distributions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Bernoulli, ChiSquared, Distribution, Poisson, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Latent `U` family; samples are shifted and scaled by the family's true
/// mean and standard deviation so `U` has mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LatentDist {
    Normal,
    StudentT { df: f64 },
    ChiSquared { df: f64 },
    Poisson { rate: f64 },
    Bernoulli { prob: f64 },
}

impl LatentDist {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LatentDist::Normal => true,
            LatentDist::StudentT { df } => df > 2.0 && df.is_finite(),
            LatentDist::ChiSquared { df } => df > 0.0 && df.is_finite(),
            LatentDist::Poisson { rate } => rate > 0.0 && rate.is_finite(),
            LatentDist::Bernoulli { prob } => prob > 0.0 && prob < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "latent distribution {self} has no finite positive variance"
            )))
        }
    }

    /// Build a reusable sampler.
    pub fn sampler(&self) -> Result<LatentSampler> {
        self.validate()?;
        Ok(match *self {
            LatentDist::Normal => LatentSampler::Normal,
            LatentDist::StudentT { df } => LatentSampler::StudentT {
                dist: StudentT::new(df).map_err(|e| Error::Input(e.to_string()))?,
                scale: ((df - 2.0) / df).sqrt(),
            },
            LatentDist::ChiSquared { df } => LatentSampler::ChiSquared {
                dist: ChiSquared::new(df).map_err(|e| Error::Input(e.to_string()))?,
                mean: df,
                sd: (2.0 * df).sqrt(),
            },
            LatentDist::Poisson { rate } => LatentSampler::Poisson {
                dist: Poisson::new(rate).map_err(|e| Error::Input(e.to_string()))?,
                mean: rate,
                sd: rate.sqrt(),
            },
            LatentDist::Bernoulli { prob } => LatentSampler::Bernoulli {
                dist: Bernoulli::new(prob).map_err(|e| Error::Input(e.to_string()))?,
                mean: prob,
                sd: (prob * (1.0 - prob)).sqrt(),
            },
        })
    }
}

impl fmt::Display for LatentDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatentDist::Normal => write!(f, "normal"),
            LatentDist::StudentT { df } => write!(f, "t:{df}"),
            LatentDist::ChiSquared { df } => write!(f, "chisq:{df}"),
            LatentDist::Poisson { rate } => write!(f, "poisson:{rate}"),
            LatentDist::Bernoulli { prob } => write!(f, "bernoulli:{prob}"),
        }
    }
}

impl FromStr for LatentDist {
    type Err = Error;

    /// `normal`, `t:DF`, `chisq:DF`, `poisson:RATE` or `bernoulli:PROB`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (family, param) = match s.split_once(':') {
            Some((f, p)) => (f, Some(p)),
            None => (s.as_str(), None),
        };
        let value = |name: &str| -> Result<f64> {
            let raw = param.ok_or_else(|| {
                Error::Input(format!("latent family '{family}' needs a {name}, e.g. {family}:3"))
            })?;
            raw.parse::<f64>()
                .map_err(|_| Error::Input(format!("latent {name} '{raw}' is not a number")))
        };
        let dist = match family {
            "normal" | "gaussian" => {
                if param.is_some() {
                    return Err(Error::Input("the normal latent family takes no parameter".into()));
                }
                LatentDist::Normal
            }
            "t" | "student_t" => LatentDist::StudentT { df: value("df")? },
            "chisq" | "chi_squared" => LatentDist::ChiSquared { df: value("df")? },
            "poisson" => LatentDist::Poisson { rate: value("rate")? },
            "bernoulli" => LatentDist::Bernoulli { prob: value("prob")? },
            other => return Err(Error::Input(format!("unknown latent family '{other}'"))),
        };
        dist.validate()?;
        Ok(dist)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum LatentSampler {
    Normal,
    StudentT { dist: StudentT<f64>, scale: f64 },
    ChiSquared { dist: ChiSquared<f64>, mean: f64, sd: f64 },
    Poisson { dist: Poisson<f64>, mean: f64, sd: f64 },
    Bernoulli { dist: Bernoulli, mean: f64, sd: f64 },
}

impl LatentSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            LatentSampler::Normal => StandardNormal.sample(rng),
            LatentSampler::StudentT { dist, scale } => dist.sample(rng) * scale,
            LatentSampler::ChiSquared { dist, mean, sd } => (dist.sample(rng) - mean) / sd,
            LatentSampler::Poisson { dist, mean, sd } => (dist.sample(rng) - mean) / sd,
            LatentSampler::Bernoulli { dist, mean, sd } => {
                (if dist.sample(rng) { 1.0 } else { 0.0 } - mean) / sd
            }
        }
    }
}
