//! Shared inputs for the benchmarks.

use geosub_core::{random_system, StateSpaceSystem, DEFAULT_ENTRY_RANGE};

/// A fixed batch of random systems of one shape.
pub fn batch(n: usize, m: usize, p: usize, count: usize) -> Vec<StateSpaceSystem> {
    (0..count as u64)
        .map(|seed| random_system(n, m, p, seed, DEFAULT_ENTRY_RANGE))
        .collect()
}
