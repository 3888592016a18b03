//! Counter-based random substreams.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream keyed by
//! `(seed, purpose, trial, user, block)`, so any single trial can be replayed
//! in isolation and results do not depend on how trials are scheduled.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// What a substream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Geometry = 1,
    SmallScale = 2,
    Noise = 3,
    Prior = 4,
    Aux = 5,
}

/// Identifies one substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub purpose: Purpose,
    pub trial: u64,
    pub user: u64,
    pub block: u64,
}

impl StreamKey {
    pub fn new(seed: u64, purpose: Purpose) -> Self {
        Self {
            seed,
            purpose,
            trial: 0,
            user: 0,
            block: 0,
        }
    }

    pub fn trial(mut self, trial: u64) -> Self {
        self.trial = trial;
        self
    }

    pub fn user(mut self, user: u64) -> Self {
        self.user = user;
        self
    }

    pub fn block(mut self, block: u64) -> Self {
        self.block = block;
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut state = splitmix(self.seed ^ 0x5bd1_e995_3c6e_f372);
        for word in [self.purpose as u64, self.trial, self.user, self.block] {
            state = splitmix(state ^ word.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        }
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            state = splitmix(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One draw from CN(0, 1).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
