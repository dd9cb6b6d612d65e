//! Pedersen commitment generators derived from a public seed.

use curve25519_dalek::ristretto::RistrettoPoint;

use crate::crypto::Element;

pub const DEFAULT_GENERATOR_SEED: &str = "eroll/shuffle-generators/v1";

/// h0 (chain base) and h_1..h_n (permutation-matrix commitment key).
#[derive(Clone, Debug)]
pub struct CommitmentKey {
    pub seed: String,
    pub h0: Element,
    pub hs: Vec<RistrettoPoint>,
}

fn derive(seed: &str, index: u64) -> Element {
    let mut data = Vec::with_capacity(seed.len() + 8);
    data.extend_from_slice(seed.as_bytes());
    data.extend_from_slice(&index.to_be_bytes());
    Element::hash_to_group(b"eroll/shuffle-generator/v1", &data)
}

impl CommitmentKey {
    pub fn derive(seed: &str, n: usize) -> Self {
        Self {
            seed: seed.to_string(),
            h0: derive(seed, 0),
            hs: (1..=n as u64).map(|i| *derive(seed, i).point()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.hs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hs.is_empty()
    }

    /// Extends the key to cover at least `n` positions.
    pub fn ensure(&mut self, n: usize) {
        let have = self.hs.len() as u64;
        self.hs.extend((have + 1..=n as u64).map(|i| *derive(&self.seed, i).point()));
    }
}
