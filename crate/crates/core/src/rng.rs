//! Seeded random streams.
//!
//! A run draws from three independent streams: nature's side information
//! `W(t)`, the controller's private randomness `U(t)` and nature's
//! transition seeds `V(t)`. All three are ChaCha8 generators keyed by the
//! same 256-bit seed (expanded from the 64-bit master seed by
//! `SeedableRng::seed_from_u64`) and separated by the ChaCha stream id
//! (0, 1 and 2). Streams therefore never overlap, and a master seed fixes
//! the whole trajectory bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIDE_STREAM: u64 = 0;
const CONTROL_STREAM: u64 = 1;
const NATURE_STREAM: u64 = 2;

#[derive(Debug, Clone)]
pub struct RngStreams {
    side: ChaCha8Rng,
    control: ChaCha8Rng,
    nature: ChaCha8Rng,
    master_seed: u64,
}

impl RngStreams {
    pub fn new(master_seed: u64) -> Self {
        let base = ChaCha8Rng::seed_from_u64(master_seed);
        let stream = |id| {
            let mut rng = base.clone();
            rng.set_stream(id);
            rng
        };
        Self {
            side: stream(SIDE_STREAM),
            control: stream(CONTROL_STREAM),
            nature: stream(NATURE_STREAM),
            master_seed,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Generator for nature's side information `W(t)`.
    pub fn side(&mut self) -> &mut ChaCha8Rng {
        &mut self.side
    }

    /// Draws the controller's `U(t) ~ Unif[0,1)`.
    pub fn control_uniform(&mut self) -> f64 {
        self.control.random::<f64>()
    }

    /// Draws nature's transition seed `V(t) ~ Unif[0,1)`.
    pub fn nature_uniform(&mut self) -> f64 {
        self.nature.random::<f64>()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a list of words (parameter bits, replicate
/// index, ...) into a new seed. Stable across platforms and releases.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}
