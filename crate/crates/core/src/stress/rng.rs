//! Counter-based per-trial randomness.
//!
//! Every variate is a pure function of `(seed, trial, tag)`: the ChaCha
//! stream is selected by the variable tag and the keystream position by the
//! trial index. Trials can therefore run in any order or on any number of
//! threads and still see the same numbers.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum VariableTag {
    Capex = 1,
    Schedule = 2,
    Shortfall = 3,
}

#[derive(Clone)]
pub struct TrialRng {
    base: ChaCha8Rng,
}

impl TrialRng {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform variate in the open interval `(0, 1)` for one trial and variable.
    pub fn uniform(&self, trial: u64, tag: VariableTag) -> f64 {
        let mut rng = self.base.clone();
        rng.set_stream(tag as u64);
        // One u64 consumes two 32-bit words of keystream.
        rng.set_word_pos(u128::from(trial) * 2);
        let bits = rng.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}
