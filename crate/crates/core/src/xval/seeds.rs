//! Stable per-stream seed derivation.
//!
//! A stream seed is the SHA-256 digest of
//!
//! ```text
//! "qnet-xval/stream/v1" || base_seed || experiment || model || stream || replica
//! ```
//!
//! with every integer encoded as 8 little-endian bytes. The digest seeds a
//! ChaCha8 generator, whose output is specified bit-for-bit and therefore
//! identical on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::linkgen::ProtocolModel;

const DOMAIN: &[u8] = b"qnet-xval/stream/v1";

pub fn stream_seed(base_seed: u64, experiment: u8, model: ProtocolModel, stream: u64, replica: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    for word in [base_seed, u64::from(experiment), model.stream_id(), stream, replica] {
        h.update(word.to_le_bytes());
    }
    h.finalize().into()
}

pub fn stream_rng(base_seed: u64, experiment: u8, model: ProtocolModel, stream: u64, replica: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(stream_seed(base_seed, experiment, model, stream, replica))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn seeds_are_stable() {
        let a = stream_seed(42, 1, ProtocolModel::RoundTrain, 0, 0);
        assert_eq!(a, stream_seed(42, 1, ProtocolModel::RoundTrain, 0, 0));
        // Pinned so an accidental change of the derivation is noticed.
        let mut h = Sha256::new();
        h.update(b"qnet-xval/stream/v1");
        for w in [42u64, 1, 0, 0, 0] {
            h.update(w.to_le_bytes());
        }
        let expected: [u8; 32] = h.finalize().into();
        assert_eq!(a, expected);
    }

    #[test]
    fn every_coordinate_changes_the_seed() {
        let mut seen = HashSet::new();
        for base in [0, 1] {
            for exp in [1, 2] {
                for model in ProtocolModel::ALL {
                    for stream in [0, 1] {
                        for rep in [0, 1] {
                            assert!(seen.insert(stream_seed(base, exp, model, stream, rep)));
                        }
                    }
                }
            }
        }
    }
}
