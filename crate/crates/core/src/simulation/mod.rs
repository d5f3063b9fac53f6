//! Simulation: data-generating processes, brute-force truths and the
//! Monte Carlo study driver.

pub mod dgp;
pub mod latent;
pub mod study;
pub mod truth;

pub use dgp::{generate, DgpSpec, PotentialOutcomes, TruthParams};
pub use latent::LatentDist;
pub use study::{run_study, McReport, McRow, StudyOptions};
pub use truth::{true_estimand, true_rates, TruthPair, TruthValue};

/// Seed of the `index`-th task derived from a master seed (SplitMix64 of
/// the pair), independent of the order tasks are run in.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
