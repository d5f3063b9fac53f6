//! Data-generating processes for the two outcome models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::latent::{LatentDist, LatentSampler};
use crate::data::{Arm, Dataset};
use crate::error::{Error, Result};
use crate::model::{ArmCoefs, BinaryParams, ContinuousParams, OutcomeKind, OutcomeModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TruthParams {
    Continuous(ContinuousParams),
    Binary(BinaryParams),
}

impl TruthParams {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            TruthParams::Continuous(_) => OutcomeKind::Continuous,
            TruthParams::Binary(_) => OutcomeKind::Binary,
        }
    }

    pub fn covariate_dim(&self) -> usize {
        match self {
            TruthParams::Continuous(m) => m.covariate_dim(),
            TruthParams::Binary(m) => m.covariate_dim(),
        }
    }

    fn arms(&self) -> &[ArmCoefs; 2] {
        match self {
            TruthParams::Continuous(m) => &m.arms,
            TruthParams::Binary(m) => &m.arms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub truth: TruthParams,
    pub n: usize,
    pub latent: LatentDist,
    pub treat_prob: f64,
}

/// Reference coefficients: three covariates, non-zero interactions in both arms.
pub fn reference_arms() -> [ArmCoefs; 2] {
    [
        ArmCoefs {
            intercept: -0.3,
            main: vec![1.2, -1.0, -0.8],
            loading: 0.7,
            interaction: vec![-0.5, 1.3, 0.6],
        },
        ArmCoefs {
            intercept: 0.2,
            main: vec![-0.8, 1.2, 1.0],
            loading: 0.8,
            interaction: vec![-0.6, 1.0, 0.6],
        },
    ]
}

pub fn reference_continuous_params() -> ContinuousParams {
    let [control, treated] = reference_arms();
    ContinuousParams {
        arms: [control, treated],
        noise_var: [1.0, 1.2],
    }
}

pub fn reference_binary_params() -> BinaryParams {
    let [control, treated] = reference_arms();
    BinaryParams {
        arms: [control, treated],
    }
}

impl DgpSpec {
    /// Continuous reference design: n = 1000, normal latent, balanced arms.
    pub fn default_continuous() -> Self {
        Self {
            truth: TruthParams::Continuous(reference_continuous_params()),
            n: 1000,
            latent: LatentDist::Normal,
            treat_prob: 0.5,
        }
    }

    /// Binary reference design: n = 2000, normal latent, balanced arms.
    pub fn default_binary() -> Self {
        Self {
            truth: TruthParams::Binary(reference_binary_params()),
            n: 2000,
            latent: LatentDist::Normal,
            treat_prob: 0.5,
        }
    }

    pub fn default_for(kind: OutcomeKind) -> Self {
        match kind {
            OutcomeKind::Continuous => Self::default_continuous(),
            OutcomeKind::Binary => Self::default_binary(),
        }
    }

    pub fn with_latent(mut self, latent: LatentDist) -> Self {
        self.latent = latent;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn kind(&self) -> OutcomeKind {
        self.truth.kind()
    }

    pub fn covariate_dim(&self) -> usize {
        self.truth.covariate_dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Input("sample size must be at least 1".into()));
        }
        if !(self.treat_prob > 0.0 && self.treat_prob < 1.0) {
            return Err(Error::Input(format!(
                "treatment probability must lie in (0, 1), got {}",
                self.treat_prob
            )));
        }
        self.latent.validate()?;
        if let TruthParams::Continuous(m) = &self.truth {
            ContinuousParams::new(m.arms[0].clone(), m.arms[1].clone(), m.noise_var)?;
        }
        Ok(())
    }
}

/// Both potential outcomes of every generated subject. Kept for oracle
/// checks; estimators only ever see the observed [`Dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialOutcomes {
    pub control: Vec<f64>,
    pub treated: Vec<f64>,
}

/// Draws `X`, `U`, `ε₀`, `ε₁` (in that order) and returns `(Y₀, Y₁)`.
pub(crate) struct SubjectDraw<'a> {
    truth: &'a TruthParams,
    sampler: LatentSampler,
    noise_sd: [f64; 2],
}

impl<'a> SubjectDraw<'a> {
    pub(crate) fn new(spec: &'a DgpSpec) -> Result<Self> {
        let noise_sd = match &spec.truth {
            TruthParams::Continuous(m) => [m.noise_var[0].sqrt(), m.noise_var[1].sqrt()],
            TruthParams::Binary(_) => [1.0, 1.0],
        };
        Ok(Self {
            truth: &spec.truth,
            sampler: spec.latent.sampler()?,
            noise_sd,
        })
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R, x: &mut [f64]) -> (f64, f64) {
        for v in x.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let u = self.sampler.sample(rng);
        let mut y = [0.0; 2];
        for (t, coefs) in self.truth.arms().iter().enumerate() {
            let eps: f64 = StandardNormal.sample(rng);
            let latent = coefs.location(x) + coefs.loading_at(x) * u + self.noise_sd[t] * eps;
            y[t] = match self.truth {
                TruthParams::Continuous(_) => latent,
                TruthParams::Binary(_) => {
                    if latent > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
        }
        (y[0], y[1])
    }
}

/// Simulate a trial: per subject `T`, then `X`, `U`, `ε₀`, `ε₁`.
pub fn generate(spec: &DgpSpec, seed: u64) -> Result<(Dataset, PotentialOutcomes)> {
    spec.validate()?;
    let p = spec.covariate_dim();
    let draw = SubjectDraw::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Dataset::with_capacity(p, spec.n);
    let mut po = PotentialOutcomes {
        control: Vec::with_capacity(spec.n),
        treated: Vec::with_capacity(spec.n),
    };
    let mut x = vec![0.0; p];
    for _ in 0..spec.n {
        let arm = if rng.gen::<f64>() < spec.treat_prob {
            Arm::Treated
        } else {
            Arm::Control
        };
        let (y0, y1) = draw.draw(&mut rng, &mut x);
        let observed = if arm == Arm::Treated { y1 } else { y0 };
        data.push(arm, &x, observed)?;
        po.control.push(y0);
        po.treated.push(y1);
    }
    Ok((data, po))
}
