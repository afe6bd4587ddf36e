//! Counter-based reproducible RNG for parallel Monte Carlo.
//!
//! Each replica owns an independent ChaCha8 stream keyed by the experiment
//! seed, with the replica id as the stream nonce. Within a replica, every
//! simulation step claims a fixed window of the block counter, so draws are a
//! pure function of `(seed, replica, step)` and replicas can run on any
//! number of workers without coordination.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 32-bit words reserved per simulation step (32 f64 draws).
const WORDS_PER_STEP: u128 = 64;

/// Deterministic, splittable per-replica generator.
#[derive(Debug, Clone)]
pub struct ReplicaRng {
    inner: ChaCha8Rng,
}

impl ReplicaRng {
    pub fn new(seed: u64, replica: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed ^ 0x9E37_79B9_7F4A_7C15;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(replica);
        Self { inner }
    }

    /// Reposition the counter at the start of `step`'s window.
    pub fn seek_step(&mut self, step: u64) {
        self.inner.set_word_pos(step as u128 * WORDS_PER_STEP);
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// A pair of independent standard Gaussians (Box-Muller).
    #[inline]
    pub fn gaussian_pair(&mut self) -> (f64, f64) {
        let r = (-2.0 * self.uniform_open().ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * self.uniform_open();
        (r * theta.cos(), r * theta.sin())
    }

    #[inline]
    pub fn gaussian(&mut self) -> f64 {
        self.gaussian_pair().0
    }
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
