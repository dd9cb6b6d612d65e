//! The κ backend servers: shuffling, decryption shares, the payload
//! registry, and the access policy for private decryptions.

use curve25519_dalek::scalar::Scalar;

use super::{ProtocolError, ProtocolRng};
use crate::board::{
    AuthEntry, Board, BoardPhase, Column, Payload, PayloadRegistry, Purpose, Record, Recipient, Section,
};
use crate::crypto::{
    combine, decryption_share, encrypt_random, verify_share, Ciphertext, CryptoError, DecryptionShare, Element,
    JointPublicKey, KeyShare,
};
use crate::shuffle::{random_permutation, shuffle_step, Columns, CommitmentKey, ShuffleStep};

pub trait MixServer: Send {
    /// 1-based server index.
    fn index(&self) -> u32;

    fn shuffle(
        &mut self,
        pk: &JointPublicKey,
        ck: &CommitmentKey,
        input: &Columns,
        rng: &mut ProtocolRng,
    ) -> Result<ShuffleStep, CryptoError>;

    /// The registry is shared by all servers, so a server may add entries.
    fn decryption_share(
        &mut self,
        c: &Ciphertext,
        registry: &mut PayloadRegistry,
        rng: &mut ProtocolRng,
    ) -> DecryptionShare;
}

pub struct HonestServer {
    key: KeyShare,
}

impl HonestServer {
    pub fn new(key: KeyShare) -> Self {
        Self { key }
    }

    pub fn key(&self) -> &KeyShare {
        &self.key
    }
}

impl MixServer for HonestServer {
    fn index(&self) -> u32 {
        self.key.index
    }

    fn shuffle(
        &mut self,
        pk: &JointPublicKey,
        ck: &CommitmentKey,
        input: &Columns,
        rng: &mut ProtocolRng,
    ) -> Result<ShuffleStep, CryptoError> {
        let n = input.first().map_or(0, Vec::len);
        let perm = random_permutation(n, rng);
        shuffle_step(pk, ck, self.key.index, input, &perm, rng)
    }

    fn decryption_share(&mut self, c: &Ciphertext, _: &mut PayloadRegistry, rng: &mut ProtocolRng) -> DecryptionShare {
        decryption_share(&self.key, c, rng)
    }
}

/// A request for a private decryption, checked against the access policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecryptRequest {
    pub recipient: Recipient,
    pub purpose: Purpose,
    pub section: Section,
    pub row: usize,
    pub column: Column,
}

#[derive(Clone, Debug)]
pub struct Decrypted {
    pub payload: Payload,
    pub element: Element,
    pub shares: Vec<DecryptionShare>,
    pub grant: AuthEntry,
}

pub struct Backend {
    pub pk: JointPublicKey,
    pub ck: CommitmentKey,
    pub servers: Vec<Box<dyn MixServer>>,
    pub registry: PayloadRegistry,
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backend").field("kappa", &self.servers.len()).field("registry", &self.registry.len()).finish()
    }
}

/// c2 − Σ d_k without checking the share proofs.
pub fn combine_unverified(c: &Ciphertext, shares: &[DecryptionShare]) -> Element {
    let sum = shares.iter().fold(Element::identity(), |acc, s| acc + s.d);
    c.c2 - sum
}

fn denied(req: &DecryptRequest, why: &str) -> ProtocolError {
    ProtocolError::Unauthorized(format!(
        "{:?} for {:?} on {:?} row {} {:?}: {why}",
        req.recipient, req.purpose, req.section, req.row, req.column
    ))
}

/// Access policy enforced by the honest server. Returns the ciphertext the
/// request refers to.
pub fn authorize(board: &Board, req: &DecryptRequest) -> Result<Ciphertext, ProtocolError> {
    let phase = board.phase();
    let in_sample = |sample: Result<crate::board::Sample, _>| -> Result<(), ProtocolError> {
        let s = sample.map_err(|_| denied(req, "no audit sample yet"))?;
        if s.indices.binary_search(&req.row).is_ok() {
            Ok(())
        } else {
            Err(denied(req, "row not in the audit sample"))
        }
    };
    match req.section {
        Section::Err => {
            let e = board.err().get(req.row).ok_or_else(|| denied(req, "no such row"))?;
            if req.column != Column::Photo {
                return Err(denied(req, "only the photograph column is released"));
            }
            match (req.recipient, req.purpose) {
                (Recipient::RegistrationOfficer(_), Purpose::DuplicateCheck)
                    if phase == Some(BoardPhase::Registration) => {}
                (Recipient::Auditor, Purpose::RegistrationAudit) => in_sample(board.sample_err())?,
                _ => return Err(denied(req, "recipient may not decrypt registration rows")),
            }
            Ok(e.c_photo)
        }
        Section::Er | Section::Ci => {
            let e = board.er().get(req.row).ok_or_else(|| denied(req, "no such row"))?;
            match (req.recipient, req.purpose) {
                (Recipient::EligibilityOfficer(j), Purpose::EligibilityCheck) => {
                    if phase != Some(BoardPhase::RollPreparation) || e.block != j || req.section != Section::Er {
                        return Err(denied(req, "eligibility officers see only their block during roll preparation"));
                    }
                }
                (Recipient::PollingOfficer(l), Purpose::CastCheck) => {
                    if phase != Some(BoardPhase::Casting) || e.booth != Some(l) {
                        return Err(denied(req, "polling officers see only their booth while casting"));
                    }
                }
                (Recipient::Auditor, Purpose::RollAudit) => in_sample(board.sample_er())?,
                _ => return Err(denied(req, "recipient may not decrypt roll rows")),
            }
            match (req.section, req.column) {
                (Section::Er, Column::Photo) => Ok(e.c_photo),
                (Section::Er, Column::Ed) => Ok(e.c_ed),
                (Section::Ci, Column::CastPhoto) => e.ci.map(|c| c.c_photo).ok_or_else(|| denied(req, "slot unset")),
                (Section::Ci, Column::RhoEv) => e.ci.map(|c| c.c_rho_ev).ok_or_else(|| denied(req, "slot unset")),
                _ => Err(denied(req, "no such column")),
            }
        }
        _ => Err(denied(req, "section holds no ciphertexts")),
    }
}

impl Backend {
    pub fn kappa(&self) -> usize {
        self.servers.len()
    }

    /// Registers `p` and encrypts its element; returns the randomness too.
    pub fn encrypt_payload(&mut self, p: &Payload, rng: &mut ProtocolRng) -> (Ciphertext, Scalar, Element) {
        let m = self.registry.encode(p);
        let (c, r) = encrypt_random(&self.pk, &m, rng);
        (c, r, m)
    }

    pub fn shares(&mut self, c: &Ciphertext, rng: &mut ProtocolRng) -> Vec<DecryptionShare> {
        let registry = &mut self.registry;
        self.servers.iter_mut().map(|s| s.decryption_share(c, registry, rng)).collect()
    }

    /// Public decryption as published on the board; the proofs are left to
    /// the auditor.
    pub fn public_decrypt(&mut self, c: &Ciphertext, rng: &mut ProtocolRng) -> (Element, Vec<DecryptionShare>) {
        let shares = self.shares(c, rng);
        (combine_unverified(c, &shares), shares)
    }

    /// Checks the policy, collects verified shares for the recipient, logs
    /// the grant on the board and releases the payload.
    pub fn private_decrypt(
        &mut self,
        board: &mut Board,
        req: DecryptRequest,
        rng: &mut ProtocolRng,
    ) -> Result<Decrypted, ProtocolError> {
        let c = authorize(board, &req)?;
        let shares = self.shares(&c, rng);
        let element = match combine(&self.pk, &c, &shares) {
            Ok(m) => m,
            Err(CryptoError::InvalidShare { index }) => return Err(ProtocolError::BadShare { server: index }),
            Err(e) => {
                let bad = shares.iter().find(|s| !verify_share(&self.pk, &c, s));
                return Err(bad.map_or(e.into(), |s| ProtocolError::BadShare { server: s.index }));
            }
        };
        let grant = AuthEntry {
            recipient: req.recipient,
            purpose: req.purpose,
            section: req.section,
            row: req.row as u32,
            column: req.column,
            element,
        };
        board.append(Record::Auth(grant))?;
        self.registry.authorize(&grant);
        let payload = self.registry.decode(&grant)?;
        Ok(Decrypted { payload, element, shares, grant })
    }
}
