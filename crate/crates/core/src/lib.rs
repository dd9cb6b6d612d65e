//! Publicly auditable, privacy-preserving electoral roll.
//!
//! The crate is organised bottom-up: [`crypto`] and [`shuffle`] provide the
//! cryptographic building blocks, [`world`] simulates the physical identity
//! oracles, [`board`] is the append-only bulletin board, [`protocol`] holds
//! the registration, roll-preparation and casting sub-protocols, [`audit`]
//! the receipt and universal audits, [`bounds`] the detection and leakage
//! bounds, and [`harness`] the adversarial trial driver.

pub mod encoding;
pub mod rng;
pub mod crypto;
pub mod shuffle;
pub mod bounds;
pub mod world;
pub mod board;
pub mod protocol;
pub mod audit;
pub mod harness;
