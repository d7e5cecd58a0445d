//! Named random sub-streams derived from a single run seed.
//!
//! Every consumer of randomness draws from its own ChaCha stream, so adding
//! a consumer never shifts the draws seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    MajorityTies = 1,
    Subsample = 2,
    Simulate = 3,
    OnlineTies = 4,
}

pub fn rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
