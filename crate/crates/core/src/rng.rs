//! Named seed derivation.
//!
//! Every actor draws randomness from a `ChaCha20Rng` keyed by a seed derived
//! from one master seed through a chain of labels.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha512};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(#[serde(with = "hex_array")] pub [u8; 32]);

impl Seed {
    pub fn from_u64(n: u64) -> Self {
        let mut h = Sha512::new();
        h.update(b"eroll/master-seed/v1");
        h.update(n.to_be_bytes());
        Self::from_hash(h)
    }

    pub fn derive(&self, label: &str) -> Seed {
        let mut h = Sha512::new();
        h.update(b"eroll/seed/v1");
        h.update(self.0);
        h.update((label.len() as u32).to_be_bytes());
        h.update(label.as_bytes());
        Self::from_hash(h)
    }

    pub fn derive_index(&self, label: &str, index: u64) -> Seed {
        let mut h = Sha512::new();
        h.update(b"eroll/seed-index/v1");
        h.update(self.0);
        h.update((label.len() as u32).to_be_bytes());
        h.update(label.as_bytes());
        h.update(index.to_be_bytes());
        Self::from_hash(h)
    }

    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(self.0)
    }

    fn from_hash(h: Sha512) -> Seed {
        let out = h.finalize();
        let mut s = [0u8; 32];
        s.copy_from_slice(&out[..32]);
        Seed(s)
    }
}

impl std::fmt::Debug for Seed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Seed({}..)", hex::encode(&self.0[..6]))
    }
}

pub(crate) mod hex_array {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(v: &[u8; N], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[u8; N], D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom(format!("expected {N} bytes")))
    }
}
