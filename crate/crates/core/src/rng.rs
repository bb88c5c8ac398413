//! Hierarchical random streams.
//!
//! Every random quantity in the crate is drawn from a [`Stream`] identified by
//! a root seed and a path of integer labels, e.g. `(TRAIN, n, m, j)` for the
//! Brownian increments of path `j` at gradient step `m` of time step `n`.
//! Two streams with different label paths are statistically independent and
//! the values drawn from a stream depend only on its key, never on which
//! worker thread draws them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Label namespaces for the top level of the hierarchy.
pub mod tag {
    pub const TRAIN_PATHS: u64 = 1;
    pub const INIT: u64 = 2;
    pub const RUN: u64 = 3;
    pub const ORACLE: u64 = 4;
    pub const TEST: u64 = 5;
    pub const BN_RECALIBRATION: u64 = 6;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream {
    words: [u64; 4],
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Stream {
    pub fn root(seed: u64) -> Self {
        let a = splitmix64(seed);
        let b = splitmix64(a ^ 0x6A09_E667_F3BC_C908);
        let c = splitmix64(b ^ 0xBB67_AE85_84CA_A73B);
        let d = splitmix64(c ^ 0x3C6E_F372_FE94_F82B);
        Stream { words: [a, b, c, d] }
    }

    /// Derives the sub-stream keyed by `label`.
    pub fn child(&self, label: u64) -> Self {
        let mut w = self.words;
        let l = splitmix64(label ^ 0xA54F_F53A_5F1D_36F1);
        for (i, word) in w.iter_mut().enumerate() {
            *word = splitmix64(word.rotate_left(17) ^ l ^ (i as u64).wrapping_mul(0x9E37_79B9));
        }
        Stream { words: w }
    }

    pub fn path(&self, labels: &[u64]) -> Self {
        labels.iter().fold(*self, |s, &l| s.child(l))
    }

    pub fn rng(&self) -> StreamRng {
        let mut seed = [0u8; 32];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(self.words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    /// Short identifier used for provenance records.
    pub fn id(&self) -> u64 {
        self.words[0] ^ self.words[2].rotate_left(32)
    }
}
