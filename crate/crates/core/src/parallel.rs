//! Reproducible parallel sampling.
//!
//! Work is cut into fixed-size blocks and block `b` always draws from ChaCha
//! stream `b` of the run seed, so results depend only on the seed and the
//! block size, never on how rayon schedules the blocks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples per block used by all samplers in this crate.
pub const BLOCK_SIZE: usize = 4096;

/// Generator for one disjoint stream of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `work(block_index, rng, len)` over `n` samples split into blocks and
/// returns the per-block results in block order.
pub fn map_blocks<T, F>(n: usize, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng, usize) -> T + Sync,
{
    let blocks = n.div_ceil(BLOCK_SIZE);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK_SIZE.min(n - b * BLOCK_SIZE);
            let mut rng = stream_rng(seed, b as u64);
            work(b, &mut rng, len)
        })
        .collect()
}
