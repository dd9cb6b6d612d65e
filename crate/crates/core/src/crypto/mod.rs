//! Group arithmetic, threshold El Gamal and sigma-protocol proofs.

pub mod decrypt;
pub mod elgamal;
pub mod group;
pub mod keys;
pub mod nizk;
pub mod transcript;

use thiserror::Error;

pub use decrypt::{
    batch_verify_decryption, combine, decryption_share, threshold_decrypt, verify_decryption, verify_share,
    DecryptionClaim, DecryptionShare, ShareProof,
};
pub use elgamal::{encrypt, encrypt_random, reencrypt, Ciphertext, CIPHERTEXT_LEN};
pub use group::{random_scalar, Element};
pub use keys::{keygen, JointPublicKey, KeyShare, PopProof, PublicShare};
pub use nizk::{prove_enc, prove_eq, verify_enc, verify_eq, DleqProof, EncKnowledgeProof, EqProof};
pub use transcript::Transcript;

pub use curve25519_dalek::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("proof of possession for server {index} does not verify")]
    InvalidPop { index: u32 },
    #[error("witness does not satisfy the relation at position {index}")]
    WitnessMismatch { index: usize },
    #[error("decryption share from server {index} is invalid")]
    InvalidShare { index: u32 },
    #[error("incomplete quorum: expected {expected} shares, got {got}")]
    IncompleteQuorum { expected: usize, got: usize },
}
