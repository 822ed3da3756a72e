//! Deterministic per-replicate random streams.
//!
//! A stream is identified by `(master seed, replicate index, role tag)`. The
//! ChaCha8 key is the SHA-256 digest of
//!
//! ```text
//! "ipsd/stream/v1" || master (u64 LE) || index (u64 LE) || len(tag) (u64 LE) || tag (UTF-8)
//! ```
//!
//! and the stream starts at word position 0. Any reimplementation that hashes
//! the same bytes and runs ChaCha with 8 rounds reproduces every draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

const DOMAIN: &[u8] = b"ipsd/stream/v1";

/// 32-byte key for the stream `(master, index, tag)`.
pub fn stream_key(master: u64, index: u64, tag: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(master.to_le_bytes());
    h.update(index.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    key
}

pub fn derive_stream(master: u64, index: u64, tag: &str) -> StreamRng {
    ChaCha8Rng::from_seed(stream_key(master, index, tag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::collections::HashSet;

    #[test]
    fn same_inputs_same_stream() {
        let a: Vec<u64> = derive_stream(7, 3, "fwd").random_iter().take(8).collect();
        let b: Vec<u64> = derive_stream(7, 3, "fwd").random_iter().take(8).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn keys_are_distinct_across_coordinates() {
        let mut seen = HashSet::new();
        for master in 0..4u64 {
            for index in 0..64u64 {
                for tag in ["fwd", "dual", "fw", "dfwd", ""] {
                    assert!(seen.insert(stream_key(master, index, tag)));
                }
            }
        }
    }

    #[test]
    fn tag_length_prefix_separates_concatenations() {
        // without the length prefix ("ab", index) and ("a", ...) could alias
        assert_ne!(stream_key(1, 0, "ab"), stream_key(1, 0, "a"));
    }

    #[test]
    fn streams_look_uniform() {
        let mut rng = derive_stream(42, 0, "check");
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| rng.random::<f64>()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * (1.0 / 12.0f64).sqrt() / (n as f64).sqrt());
    }
}
