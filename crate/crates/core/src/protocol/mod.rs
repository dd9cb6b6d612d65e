//! Setup, registration, roll preparation and casting.
//!
//! Officers are trait objects; the honest implementations live here and the
//! adversarial ones in [`crate::harness`]. Every sub-protocol draws its
//! randomness from a stream derived from the election seed and the session,
//! so runs replay bit-exactly.

pub mod backend;
pub mod cast;
pub mod election;
pub mod receipts;
pub mod register;
pub mod roll;
pub mod stub;
pub mod voter;

use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{BoardError, RegistryError};
use crate::crypto::CryptoError;
use crate::world::{Authority, Env, Phase, PhotoToken, SubjectId, World, WorldError};

pub use backend::{Backend, DecryptRequest, Decrypted, HonestServer, MixServer};
pub use cast::{close_polls, Ballot, Booth, HonestPollingOfficer, PollingOfficer};
pub use election::{Election, ElectionConfig, Officers};
pub use receipts::{AcceptReceipt, CastReceipt, Q11, Q12, Q21, Q22, RegReceipt};
pub use register::{build_accept, Desk, HonestRegistrationOfficer, RegistrationOfficer};
pub use roll::{prepare_roll, EligibilityOfficer, HonestEligibilityOfficer, Office, RollSummary};
pub use stub::{StubAuthority, StubVote};
pub use voter::{cvalid, rvalid, VoterCard};

pub type ProtocolRng = ChaCha20Rng;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("decryption not authorized: {0}")]
    Unauthorized(String),
    #[error("decryption share from server {server} does not verify")]
    BadShare { server: u32 },
    #[error("protocol alarm: {0}")]
    Alarm(String),
    #[error("configuration error: {0}")]
    Config(String),
}

/// What a voter states at the registration desk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub uid: String,
    pub ed: String,
    pub block: u32,
}

/// A voter physically present with an officer. Every photograph taken is
/// seen by the voter, which is what the manual receipt checks compare.
#[derive(Clone, Debug)]
pub struct Session {
    pub subject: SubjectId,
    pub phase: Phase,
    pub seen: Vec<PhotoToken>,
}

impl Session {
    pub fn new(subject: SubjectId, phase: Phase) -> Self {
        Self { subject, phase, seen: vec![] }
    }

    pub fn capture(&mut self, world: &World, env: Env) -> Result<PhotoToken, WorldError> {
        let p = world.capture(self.subject, env, Authority::Session { subject: self.subject, phase: self.phase })?;
        self.seen.push(p);
        Ok(p)
    }

    pub fn saw(&self, p: &PhotoToken) -> bool {
        self.seen.contains(p)
    }

    pub fn saw_env(&self, env: Env) -> bool {
        self.seen.iter().any(|p| p.env() == env)
    }
}

#[cfg(test)]
mod tests;
