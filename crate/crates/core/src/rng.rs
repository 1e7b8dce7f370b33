//! Reproducible random streams.
//!
//! Every chain, replication and grid cell draws from its own ChaCha8 stream.
//! The key is the user seed; the stream id is a hash of a path of integer
//! tags such as `(cell, replication, model)`. Streams never overlap, so
//! results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stream derived from `seed` and a tag path.
pub fn stream(seed: u64, tags: &[u64]) -> ChainRng {
    let mut id = 0x6d64_676d_u64;
    for &t in tags {
        id = splitmix64(id ^ t);
    }
    let mut rng = ChainRng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
