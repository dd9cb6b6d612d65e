//! Verifiable re-encryption mix-net over aligned ciphertext columns.

pub mod generators;
pub mod proof;
pub mod transcript;

pub use generators::{CommitmentKey, DEFAULT_GENERATOR_SEED};
pub use proof::{
    column_len, is_permutation, random_permutation, shuffle_step, verify_shuffle, verify_step, Columns, ShuffleProof,
    ShuffleStep, StepProof,
};
