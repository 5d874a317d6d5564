//! Deterministic seed derivation for independent random streams.
//!
//! Every stochastic component draws from its own ChaCha stream whose seed is a
//! pure function of (master seed, station, run index, purpose). Adding
//! controllers or reordering work never perturbs the randomness of existing
//! runs.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    TruthNoise,
    Power,
    Events,
    PdmpPath,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::TruthNoise => 0x74727574, // "trut"
            StreamPurpose::Power => 0x706f7772,      // "powr"
            StreamPurpose::Events => 0x65766e74,     // "evnt"
            StreamPurpose::PdmpPath => 0x70646d70,   // "pdmp"
        }
    }
}

/// splitmix64 finalizer; a fixed, portable mixing function.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seed for the (station, run, purpose) stream. `station` is 0 for a, 1 for b,
/// and any other value for streams not tied to one station.
pub fn derive_seed(master: u64, station: u64, run_index: u64, purpose: StreamPurpose) -> u64 {
    let mut h = mix(master);
    h = mix(h ^ station.wrapping_mul(0xd6e8feb86659fd93));
    h = mix(h ^ run_index.wrapping_mul(0xa5cb3bfe2f56f4b1));
    h = mix(h ^ purpose.tag());
    h
}

/// ChaCha stream for the derived seed.
pub fn stream(master: u64, station: u64, run_index: u64, purpose: StreamPurpose) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, station, run_index, purpose))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a = derive_seed(42, 0, 0, StreamPurpose::TruthNoise);
        let b = derive_seed(42, 1, 0, StreamPurpose::TruthNoise);
        let c = derive_seed(42, 0, 1, StreamPurpose::TruthNoise);
        let d = derive_seed(42, 0, 0, StreamPurpose::Events);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_eq!(a, derive_seed(42, 0, 0, StreamPurpose::TruthNoise));
    }
}
