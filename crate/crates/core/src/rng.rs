//! Seeded random streams.
//!
//! Every stimulus draws from its own ChaCha8 stream: the 64-bit seed keys the
//! generator and the stream number is `(domain << 48) | index`, so stimuli can
//! be generated in any order or in parallel with identical results on every
//! platform.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StimulusRng = ChaCha8Rng;

/// Stream domains keep independent uses of one seed apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Stimulus = 1,
    Detector = 2,
    Session = 3,
    Oracle = 4,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> StimulusRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 48) | (index & ((1 << 48) - 1)));
    rng
}

/// A seed for a nested component, taken from the first word of a stream.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    stream(seed, domain, index).next_u64()
}
