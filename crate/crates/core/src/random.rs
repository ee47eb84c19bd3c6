//! Seeded test-function generators. Every random quantity in the crate
//! flows through [`seeded_rng`] so runs are reproducible from the seed alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::DyadicGrid;

/// Name of the generator recorded in output sidecars.
pub const RNG_NAME: &str = "ChaCha8";

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform samples in `[-1, 1)`.
///
/// # Panics
/// If `resolution` exceeds the configured cap.
pub fn random_grid(resolution: u32, seed: u64) -> DyadicGrid {
    let mut rng = seeded_rng(seed);
    DyadicGrid::from_fn(resolution, |_| rng.gen_range(-1.0..1.0)).expect("resolution within cap")
}

/// Uniform samples in `[0, 1)` with a sprinkling of tall spikes, which
/// makes maximal-function tests less forgiving.
///
/// # Panics
/// If `resolution` exceeds the configured cap.
pub fn random_nonneg_grid(resolution: u32, seed: u64) -> DyadicGrid {
    let mut rng = seeded_rng(seed);
    DyadicGrid::from_fn(resolution, |_| {
        let v: f64 = rng.gen();
        if rng.gen_bool(0.01) {
            v * 100.0
        } else {
            v
        }
    })
    .expect("resolution within cap")
}

/// `count` distinct integers from `lo..hi`, ascending.
pub fn sample_distinct(lo: u64, hi: u64, count: usize, seed: u64) -> Vec<u64> {
    assert!(hi > lo);
    let span = hi - lo;
    let count = count.min(span as usize);
    let mut rng = seeded_rng(seed);
    let mut out = std::collections::BTreeSet::new();
    while out.len() < count {
        out.insert(lo + rng.gen_range(0..span));
    }
    out.into_iter().collect()
}
