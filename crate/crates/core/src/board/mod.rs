//! Append-only bulletin board, H_α sampler and payload registry.

pub mod records;
pub mod registry;
pub mod sampler;
pub mod store;

pub use records::*;
pub use registry::{payload_element, Payload, PayloadRegistry, RegistryError};
pub use sampler::{select_h_alpha, Sample};
pub use store::{Board, BoardError, Digest};
