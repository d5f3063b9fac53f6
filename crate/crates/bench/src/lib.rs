//! Fixtures shared by the benchmarks.

use hetfx::simulation::{generate, DgpSpec};
use hetfx::{Dataset, OutcomeKind};

/// One dataset from the reference design of the given outcome kind.
pub fn reference_dataset(kind: OutcomeKind, seed: u64) -> Dataset {
    generate(&DgpSpec::default_for(kind), seed)
        .expect("reference design is valid")
        .0
}
