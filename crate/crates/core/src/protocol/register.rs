//! Registration at an RO desk.

use std::collections::BTreeSet;

use rand::{Rng, RngCore};

use super::backend::{Backend, DecryptRequest, Decrypted};
use super::receipts::{AcceptReceipt, RegReceipt, Q11, Q12, Q21, Q22};
use super::{Presentation, ProtocolError, ProtocolRng, Session};
use crate::board::{Board, Column, ErrEntry, Payload, Purpose, Record, Recipient, Section};
use crate::crypto::{prove_enc, prove_eq, DleqProof};
use crate::encoding::Encode;
use crate::world::{Env, PhotoToken, World};

/// Everything an RO can touch while serving one voter (or, with no
/// session, while closing registration).
pub struct Desk<'a> {
    pub officer: u32,
    pub board: &'a mut Board,
    pub backend: &'a mut Backend,
    pub world: &'a World,
    pub session: Option<&'a mut Session>,
    /// Vids issued so far in this election.
    pub vids: &'a mut BTreeSet<u64>,
    pub rng: &'a mut ProtocolRng,
}

impl Desk<'_> {
    pub fn capture(&mut self, env: Env) -> Result<PhotoToken, ProtocolError> {
        let s = self.session.as_deref_mut().ok_or_else(|| ProtocolError::Alarm("no voter at the desk".into()))?;
        Ok(s.capture(self.world, env)?)
    }

    /// A vid drawn uniformly from the configured decimal space, rejecting
    /// collisions with vids already issued.
    pub fn fresh_vid(&mut self) -> Result<u64, ProtocolError> {
        let digits = self.board.header()?.vid_digits;
        let space = 10u64.pow(digits);
        if self.vids.len() as u64 >= space {
            return Err(ProtocolError::Config("vid space exhausted".into()));
        }
        loop {
            let v = self.rng.gen_range(0..space);
            if self.vids.insert(v) {
                return Ok(v);
            }
        }
    }

    pub fn find_uid(&self, uid: &str) -> Option<usize> {
        self.board.err().iter().position(|e| e.uid == uid)
    }

    /// Private decryption of a prior registration photograph.
    pub fn decrypt_prior(&mut self, row: usize) -> Result<Decrypted, ProtocolError> {
        let req = DecryptRequest {
            recipient: Recipient::RegistrationOfficer(self.officer),
            purpose: Purpose::DuplicateCheck,
            section: Section::Err,
            row,
            column: Column::Photo,
        };
        self.backend.private_decrypt(self.board, req, self.rng)
    }
}

pub trait RegistrationOfficer: Send {
    fn register(&mut self, desk: &mut Desk<'_>, claim: &Presentation) -> Result<RegReceipt, ProtocolError>;

    /// Runs once when registration closes.
    fn close(&mut self, _desk: &mut Desk<'_>) -> Result<(), ProtocolError> {
        Ok(())
    }
}

/// Builds an ERR row and its Accept receipt. `ed_uploaded` is what goes
/// into `c_ed`; an honest RO passes the printed `ed`. When the two differ no
/// equality proof exists and ρ_eq is replaced by random bytes of the same
/// length.
#[allow(clippy::too_many_arguments)]
pub fn build_accept(
    backend: &mut Backend,
    rng: &mut ProtocolRng,
    uid: &str,
    photo: &PhotoToken,
    vid: u64,
    block: u32,
    ed: &str,
    ed_uploaded: &str,
) -> Result<(ErrEntry, AcceptReceipt), ProtocolError> {
    let (c_vid, r_vid, m_vid) = backend.encrypt_payload(&Payload::Vid(vid), rng);
    let (c_block, r_block, m_block) = backend.encrypt_payload(&Payload::Block(block), rng);
    let (c_ed, r_ed, _) = backend.encrypt_payload(&Payload::Ed(ed_uploaded.to_string()), rng);
    let (c_photo, r_photo, m_photo) = backend.encrypt_payload(&Payload::Photo(*photo), rng);
    let (cs_vid, rs_vid, _) = backend.encrypt_payload(&Payload::Vid(vid), rng);
    let (cs_block, rs_block, _) = backend.encrypt_payload(&Payload::Block(block), rng);
    let (cs_ed, rs_ed, m_ed) = backend.encrypt_payload(&Payload::Ed(ed.to_string()), rng);
    let pk = &backend.pk;

    let rho_enc1 = prove_enc(pk, &[m_photo], &[c_photo], &[r_photo], rng)?;
    let rho_enc2 = prove_enc(pk, &[m_vid, m_block, m_ed], &[cs_vid, cs_block, cs_ed], &[rs_vid, rs_block, rs_ed], rng)?;
    let pairs = [(c_vid, cs_vid), (c_block, cs_block), (c_ed, cs_ed)];
    let rho_eq = match prove_eq(pk, &pairs, &[(r_vid, rs_vid), (r_block, rs_block), (r_ed, rs_ed)], rng) {
        Ok(p) => p.to_bytes(),
        Err(_) => {
            let mut junk = vec![0u8; DleqProof::encoded_len(3)];
            rng.fill_bytes(&mut junk);
            junk
        }
    };
    let mut rho_eq1 = vec![0u8; rho_eq.len()];
    rng.fill_bytes(&mut rho_eq1);
    let rho_eq2 = rho_eq1.iter().zip(&rho_eq).map(|(a, b)| a ^ b).collect();

    let entry = ErrEntry { uid: uid.to_string(), c_vid, c_block, c_ed, c_photo };
    let receipt = AcceptReceipt {
        q11: Q11 { uid: uid.to_string(), photo: *photo, rho_enc1 },
        q12: Q12 { c_vid, c_block, c_ed, c_photo, rho_eq1 },
        q21: Q21 { vid, block, ed: ed.to_string(), rho_enc2 },
        q22: Q22 { cs_vid, cs_block, cs_ed, rho_eq2 },
    };
    Ok((entry, receipt))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HonestRegistrationOfficer;

impl RegistrationOfficer for HonestRegistrationOfficer {
    fn register(&mut self, desk: &mut Desk<'_>, claim: &Presentation) -> Result<RegReceipt, ProtocolError> {
        let pre = desk.capture(Env::PreRegistration)?;
        if !desk.world.has_uid(&pre, &claim.uid) {
            return Ok(RegReceipt::Reject { uid: claim.uid.clone(), pre });
        }
        if let Some(row) = desk.find_uid(&claim.uid) {
            let prior = match desk.decrypt_prior(row)?.payload {
                Payload::Photo(p) => p,
                other => return Err(ProtocolError::Alarm(format!("ERR row {row} photo decrypts to {other:?}"))),
            };
            if !desk.world.matches(&prior, &pre) {
                return Err(ProtocolError::Alarm(format!("ERR row {row} holds uid {} with another face", claim.uid)));
            }
            return Ok(RegReceipt::DupReg { pre, prior });
        }
        let photo = desk.capture(Env::Registration)?;
        let vid = desk.fresh_vid()?;
        let (entry, receipt) =
            build_accept(desk.backend, desk.rng, &claim.uid, &photo, vid, claim.block, &claim.ed, &claim.ed)?;
        desk.board.append(Record::Err(entry))?;
        Ok(RegReceipt::Accept(Box::new(receipt)))
    }
}

/// Dummy rows for enrolled uids that did not register, hiding who stayed
/// away. The photograph column encrypts ⊥ and the eligibility data is empty.
pub fn register_dummies(desk: &mut Desk<'_>, enrolled: &[String]) -> Result<usize, ProtocolError> {
    let blocks = desk.board.header()?.blocks;
    let mut added = 0;
    for uid in enrolled {
        if desk.find_uid(uid).is_some() {
            continue;
        }
        let vid = desk.fresh_vid()?;
        let block = desk.rng.gen_range(1..=blocks);
        let (c_vid, ..) = desk.backend.encrypt_payload(&Payload::Vid(vid), desk.rng);
        let (c_block, ..) = desk.backend.encrypt_payload(&Payload::Block(block), desk.rng);
        let (c_ed, ..) = desk.backend.encrypt_payload(&Payload::Ed(String::new()), desk.rng);
        let (c_photo, ..) = desk.backend.encrypt_payload(&Payload::Bottom, desk.rng);
        desk.board.append(Record::Err(ErrEntry { uid: uid.clone(), c_vid, c_block, c_ed, c_photo }))?;
        added += 1;
    }
    Ok(added)
}
