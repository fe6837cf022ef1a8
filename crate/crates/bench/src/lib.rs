//! Shared fixtures for the benchmarks.

use graphimpute::{generate_sbm, Dataset, FeatureTable, SyntheticSpec};

/// Default-sized block model with 90% of feature entries hidden.
pub fn fixture(seed: u64) -> (Dataset, FeatureTable) {
    let d = generate_sbm(&SyntheticSpec {
        seed,
        ..SyntheticSpec::default()
    })
    .expect("default spec is valid");
    let x = d.features.mask_uniform(0.9, seed + 1).expect("rate is valid");
    (d, x)
}
