//! Brute-force population values of the estimands.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{DgpSpec, SubjectDraw};
use crate::error::{Error, Result};
use crate::estimands::EstimandKind;
use crate::model::OutcomeKind;

pub const DEFAULT_TRUTH_DRAWS: u64 = 10_000_000;
pub const DEFAULT_TRUTH_SEED: u64 = 0x7275_7468;
const CHUNK: u64 = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthValue {
    pub value: f64,
    /// Binomial Monte Carlo standard error.
    pub mc_se: f64,
    pub draws: u64,
}

impl TruthValue {
    fn from_count(count: u64, draws: u64) -> Self {
        let value = count as f64 / draws as f64;
        Self {
            value,
            mc_se: (value * (1.0 - value) / draws as f64).sqrt(),
            draws,
        }
    }
}

/// Benefit and harm rates computed from the same draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthPair {
    pub benefit: TruthValue,
    pub harm: TruthValue,
}

type CacheKey = (String, u64, u64, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, TruthPair>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, TruthPair>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Frequencies of benefit and harm over `draws` joint draws of
/// `(X, U, ε₀, ε₁)`. Continuous outcomes need the margin `c`.
/// Results are cached per `(truth, latent, c, draws, seed)`.
pub fn true_rates(spec: &DgpSpec, c: Option<f64>, draws: u64, seed: u64) -> Result<TruthPair> {
    spec.validate()?;
    if draws == 0 {
        return Err(Error::Input("truth needs at least one draw".into()));
    }
    let margin = match (spec.kind(), c) {
        (OutcomeKind::Continuous, Some(c)) if !c.is_nan() => c,
        (OutcomeKind::Continuous, _) => {
            return Err(Error::Input("continuous rates need a margin c".into()))
        }
        (OutcomeKind::Binary, _) => 0.0,
    };
    let key = (
        format!("{:?}|{}", spec.truth, spec.latent),
        margin.to_bits(),
        draws,
        seed,
    );
    if let Some(hit) = cache().lock().expect("truth cache poisoned").get(&key) {
        return Ok(*hit);
    }

    let draw = SubjectDraw::new(spec)?;
    let p = spec.covariate_dim();
    let binary = spec.kind() == OutcomeKind::Binary;
    let chunks = draws.div_ceil(CHUNK);
    let counts: Vec<(u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let size = CHUNK.min(draws - chunk * CHUNK);
            let mut x = vec![0.0; p];
            let (mut benefit, mut harm) = (0, 0);
            for _ in 0..size {
                let (y0, y1) = draw.draw(&mut rng, &mut x);
                if binary {
                    benefit += (y0 == 0.0 && y1 == 1.0) as u64;
                    harm += (y0 == 1.0 && y1 == 0.0) as u64;
                } else {
                    benefit += (y1 - y0 > margin) as u64;
                    harm += (y0 - y1 > margin) as u64;
                }
            }
            (benefit, harm)
        })
        .collect();
    let benefit: u64 = counts.iter().map(|c| c.0).sum();
    let harm: u64 = counts.iter().map(|c| c.1).sum();
    let pair = TruthPair {
        benefit: TruthValue::from_count(benefit, draws),
        harm: TruthValue::from_count(harm, draws),
    };
    cache().lock().expect("truth cache poisoned").insert(key, pair);
    Ok(pair)
}

/// Population value of one estimand with the default number of draws.
pub fn true_estimand(spec: &DgpSpec, kind: EstimandKind, c: Option<f64>) -> Result<TruthValue> {
    if kind.outcome_kind() != spec.kind() {
        return Err(Error::Input(format!(
            "{} is not defined for {} outcomes",
            kind.label(),
            spec.kind().name()
        )));
    }
    let pair = true_rates(spec, c, DEFAULT_TRUTH_DRAWS, DEFAULT_TRUTH_SEED)?;
    Ok(match kind {
        EstimandKind::BenefitAbove | EstimandKind::Benefit => pair.benefit,
        EstimandKind::HarmAbove | EstimandKind::Harm => pair.harm,
    })
}
