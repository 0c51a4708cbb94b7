//! Shared fixtures for the criterion benchmarks under `benches/`.

use dfp_core::rng::SeededRng;
use dfp_core::FeatureMap;

/// `channels × positions` feature with standard normal entries.
pub fn random_feature(channels: usize, positions: usize, seed: u64) -> FeatureMap {
    let mut rng = SeededRng::new(seed);
    let data = (0..channels * positions)
        .map(|_| rng.standard_normal())
        .collect();
    FeatureMap::new(channels, 1, positions, data).expect("positive dimensions")
}
