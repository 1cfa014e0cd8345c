//! Seed derivation. Every random component draws from its own ChaCha stream
//! keyed by (master seed, stream id, index) so results do not depend on the
//! order in which frames or workers are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channel = 1,
    Noise = 2,
    CsiError = 3,
    Data = 4,
    EdgeInterleaver = 5,
    UserInterleaver = 6,
    ExitMeasurement = 7,
    Optimizer = 8,
    Capacity = 9,
    FeedbackVariance = 10,
    Code = 11,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed for `stream` and `index` (frame, user, grid point, ...).
pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    let a = splitmix64(master ^ splitmix64(stream as u64));
    splitmix64(a ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Two-level derivation, e.g. (frame, user).
pub fn derive_seed2(master: u64, stream: Stream, i: u64, j: u64) -> u64 {
    derive_seed(derive_seed(master, stream, i), stream, j)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn stream_rng(master: u64, stream: Stream, index: u64) -> SimRng {
    rng_from_seed(derive_seed(master, stream, index))
}
