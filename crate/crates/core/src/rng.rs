//! Named random substreams derived from a master seed.
//!
//! Every Monte Carlo loop works on blocks of [`BLOCK_SIZE`] replicates. Block
//! `k` of a substream draws from a ChaCha8 generator keyed by the substream
//! and positioned on stream `k`, so the draws seen by a replicate depend only
//! on `(master seed, substream name, replicate index)` and never on how the
//! blocks are scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const BLOCK_SIZE: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substream {
    name: String,
    key: [u8; 32],
}

impl Substream {
    pub fn derive(master_seed: u64, name: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(master_seed.to_le_bytes());
        hasher.update(name.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        Self { name: name.to_owned(), key }
    }

    /// Child substream, e.g. one per alternative.
    pub fn child(&self, name: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(self.key);
        hasher.update(name.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        Self { name: format!("{}/{}", self.name, name), key }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// First eight key bytes, used as a printable identifier in manifests.
    pub fn seed_id(&self) -> u64 {
        u64::from_le_bytes(self.key[..8].try_into().unwrap())
    }

    pub fn block_rng(&self, block: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(block);
        rng
    }

    /// Single sequential generator (block 0); for small jobs like probe sets.
    pub fn rng(&self) -> ChaCha8Rng {
        self.block_rng(0)
    }
}
