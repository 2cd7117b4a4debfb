//! Named random substreams.
//!
//! Every stochastic component draws from its own ChaCha8 stream derived from
//! the single top-level seed, a stream name and an index:
//!
//! ```text
//! stream_seed = splitmix64(seed ^ fnv1a64(name) ^ splitmix64(index))
//! ```
//!
//! Stream names in use: `"synth"` (corpus generation), `"folds"` (one stream
//! per CV repeat), `"explore"` (ε-greedy exploration, one per fold) and
//! `"baseline"` (mini-batch shuffling, one per fold).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::fnv1a64;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn substream_seed(seed: u64, name: &str, index: u64) -> u64 {
    splitmix64(seed ^ fnv1a64(name.as_bytes()) ^ splitmix64(index))
}

pub fn substream(seed: u64, name: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, name, index))
}
