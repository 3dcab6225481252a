//! Seed splitting.
//!
//! Every random draw in a run comes from a stream keyed by
//! `(master seed, replication, purpose)`. The key is folded through the
//! splitmix64 finalizer one component at a time and the result seeds a
//! ChaCha8 generator, so streams for different replications or purposes are
//! statistically independent and each can be regenerated on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// Synthetic reward tensor.
    Truth,
    /// Reward noise.
    Noise,
    /// Context arrivals.
    Context,
    /// Internal randomness of the policy.
    Policy,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Truth => 0x7472_7574_6800_0001,
            Purpose::Noise => 0x6e6f_6973_6500_0002,
            Purpose::Context => 0x636f_6e74_6500_0003,
            Purpose::Policy => 0x706f_6c69_6300_0004,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the stream for one replication and purpose.
pub fn derive_seed(master: u64, replication: u64, purpose: Purpose) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ replication);
    splitmix64(h ^ purpose.tag())
}

pub fn stream(master: u64, replication: u64, purpose: Purpose) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, replication, purpose))
}
