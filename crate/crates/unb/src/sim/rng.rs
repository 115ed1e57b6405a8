//! Counter-based stream seeding.
//!
//! Every (master seed, stream, index) triple maps to an independent ChaCha
//! stream, so realizations can be evaluated in any order or on any number of
//! workers and still reproduce bit-identical results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; full-period mixing of a 64-bit counter.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG for one work unit.
pub fn stream_rng(master_seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut state = master_seed;
    state = mix64(state ^ mix64(stream));
    state = mix64(state ^ mix64(index));
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        state = state.wrapping_add(mix64(state ^ i as u64));
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Stream tags; keep distinct per independent use.
pub const STREAM_REALIZATION: u64 = 0x01;
pub const STREAM_DIAGNOSTIC: u64 = 0x02;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<u64> = {
            let mut r = stream_rng(5, STREAM_REALIZATION, 17);
            (0..8).map(|_| r.gen()).collect()
        };
        let b: Vec<u64> = {
            let mut r = stream_rng(5, STREAM_REALIZATION, 17);
            (0..8).map(|_| r.gen()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn nearby_indices_decorrelate() {
        let a: u64 = stream_rng(5, STREAM_REALIZATION, 0).gen();
        let b: u64 = stream_rng(5, STREAM_REALIZATION, 1).gen();
        let c: u64 = stream_rng(6, STREAM_REALIZATION, 0).gen();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
