//! Counter-based random streams.
//!
//! Every stochastic step derives its generator from a master seed plus a key
//! path (iteration index, observation index, quantity, trial, ...). Streams
//! are therefore independent of execution order and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a key path into a single 64-bit stream id.
pub fn stream_id(keys: &[u64]) -> u64 {
    keys.iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// Generator for the stream identified by `keys` under `master`.
pub fn stream_rng(master: u64, keys: &[u64]) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream_id(keys));
    rng
}
