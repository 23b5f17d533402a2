//! Deterministic random streams.
//!
//! Every random quantity in the crate comes from ChaCha8 keyed by the user
//! seed. Independent streams are selected with the 64-bit ChaCha stream id,
//! whose top byte names the purpose ([`Domain`]) and whose low 56 bits carry
//! the replicate, path or chunk index. Results therefore depend only on
//! `(seed, domain, index)` and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    /// Single simulated path requested directly by the caller.
    Path = 0,
    /// Replicate `r` of a Monte Carlo experiment.
    Replicate = 1,
    /// Chunk `k` of draws from a `W` sampler.
    WSampler = 2,
    /// Brownian paths of the Laplace-transform check.
    Laplace = 3,
}

const INDEX_BITS: u32 = 56;
pub const MAX_INDEX: u64 = (1 << INDEX_BITS) - 1;

/// Stream for `(seed, domain, index)`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    assert!(index <= MAX_INDEX, "stream index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << INDEX_BITS) | index);
    rng
}

#[inline]
pub fn normal(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}
