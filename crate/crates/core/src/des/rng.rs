//! Named random substreams.
//!
//! Every stream is a ChaCha8 generator keyed by the run seed and selected by
//! its stream number, so changing how one stream is consumed never perturbs
//! the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GENERATION_STREAM: u64 = 1;
pub const CHANNEL_STREAM: u64 = 2;
pub const PHASE_STREAM: u64 = 3;
pub const SERVICE_STREAM: u64 = 4;
pub const BLOCK_STREAM: u64 = 5;

#[derive(Debug, Clone)]
pub struct Substreams {
    /// Inter-arrival times and originating device.
    pub generation: ChaCha8Rng,
    /// Witness choice and per-attempt link outcomes.
    pub channel: ChaCha8Rng,
    /// Service phase when it is not fixed by classification.
    pub phase: ChaCha8Rng,
    pub service: ChaCha8Rng,
    pub block: ChaCha8Rng,
}

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl Substreams {
    pub fn new(seed: u64) -> Self {
        Substreams {
            generation: substream(seed, GENERATION_STREAM),
            channel: substream(seed, CHANNEL_STREAM),
            phase: substream(seed, PHASE_STREAM),
            service: substream(seed, SERVICE_STREAM),
            block: substream(seed, BLOCK_STREAM),
        }
    }
}

/// SplitMix64 finalizer, used to derive replication seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
