//! Counter-based random streams.
//!
//! Particle `i` of iteration `t` under run seed `s` always reads the same
//! ChaCha8 keystream: the key comes from `s`, the stream id from `t`, and the
//! word position from `i`. Draws therefore do not depend on thread count or
//! on the sizes of later iterations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Words of keystream reserved for each particle.
const WORDS_PER_PARTICLE_LOG2: u32 = 32;

/// Keyed factory for per-particle generators.
#[derive(Clone)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator for particle `index` of iteration `iteration`.
    pub fn particle(&self, iteration: u64, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(iteration);
        rng.set_word_pos((index as u128) << WORDS_PER_PARTICLE_LOG2);
        rng
    }
}

/// Derives the seed of replicate `index` from a base seed (SplitMix64 step).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
