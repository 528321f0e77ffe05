//! Seed derivation so that every random stream in a run is addressable by
//! `(run seed, step, purpose)` and independent of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for derived streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Shuffle = 2,
    Growth = 3,
    Sbm = 4,
    Hide = 5,
    Gf = 6,
    Null = 7,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, step: usize, stream: Stream) -> u64 {
    splitmix(splitmix(seed ^ splitmix(stream as u64)) ^ (step as u64))
}

pub fn rng(seed: u64, step: usize, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, step, stream))
}
