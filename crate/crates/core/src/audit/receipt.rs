//! Individual audits of registration and cast receipts. Neither needs a
//! private decryption: everything is checked against printed values, the
//! public board and the oracles.

use serde::{Deserialize, Serialize};

use super::{AuditVerdict, Trail};
use crate::board::{Board, Payload};
use crate::crypto::{verify_decryption, verify_enc, verify_eq, DecryptionClaim};
use crate::protocol::{AcceptReceipt, CastReceipt, RegReceipt, Q11, Q12, Q21, Q22};
use crate::world::{Env, PhotoToken, World};

/// The two quadrants of an Accept receipt the voter hands over, by β.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadrantDisclosure {
    /// β = 0: the identity half.
    Identity { q11: Q11, q12: Q12 },
    /// β = 1: the roll half.
    Roll { q21: Q21, q22: Q22 },
    /// β = 2: the two ciphertext quadrants.
    Link { q12: Q12, q22: Q22 },
}

impl QuadrantDisclosure {
    pub fn from_receipt(r: &AcceptReceipt, beta: u8) -> Self {
        match beta % 3 {
            0 => Self::Identity { q11: r.q11.clone(), q12: r.q12.clone() },
            1 => Self::Roll { q21: r.q21.clone(), q22: r.q22.clone() },
            _ => Self::Link { q12: r.q12.clone(), q22: r.q22.clone() },
        }
    }

    pub fn beta(&self) -> u8 {
        match self {
            Self::Identity { .. } => 0,
            Self::Roll { .. } => 1,
            Self::Link { .. } => 2,
        }
    }
}

/// What the voter shows the auditor for a registration receipt.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegDisclosure {
    Reject { uid: String, pre: PhotoToken },
    DupReg { pre: PhotoToken, prior: PhotoToken },
    Accept(QuadrantDisclosure),
}

impl RegDisclosure {
    pub fn from_receipt(r: &RegReceipt, beta: u8) -> Self {
        match r {
            RegReceipt::Reject { uid, pre } => Self::Reject { uid: uid.clone(), pre: *pre },
            RegReceipt::DupReg { pre, prior } => Self::DupReg { pre: *pre, prior: *prior },
            RegReceipt::Accept(a) => Self::Accept(QuadrantDisclosure::from_receipt(a, beta)),
        }
    }
}

pub fn ind_reg_audit(board: &Board, world: &World, disclosure: &RegDisclosure) -> AuditVerdict {
    let mut t = Trail::new(world);
    let header = match board.header() {
        Ok(h) => h,
        Err(e) => {
            t.check("reg.board", false, e.to_string());
            return t.finish();
        }
    };
    let pk = &header.pk;
    match disclosure {
        RegDisclosure::Reject { uid, pre } => {
            let known = world.has_uid(pre, uid);
            t.check("reg.reject-fair", !known, format!("uid {uid} belongs to the person photographed: {known}"));
        }
        RegDisclosure::DupReg { pre, prior } => {
            let live = world.live(prior, Env::Registration);
            let same = world.matches(prior, pre);
            t.check("reg.dup-fair", live && same, format!("prior photo live in env_r: {live}; matches: {same}"));
        }
        RegDisclosure::Accept(QuadrantDisclosure::Identity { q11, q12 }) => {
            let m = Payload::Photo(q11.photo).element();
            let proof = verify_enc(pk, &[m], &[q12.c_photo], &q11.rho_enc1);
            t.check("reg.photo-encryption", proof, "ρ_enc1 over the photograph ciphertext");
            let row = board.err().iter().position(|e| {
                e.uid == q11.uid
                    && e.c_vid == q12.c_vid
                    && e.c_block == q12.c_block
                    && e.c_ed == q12.c_ed
                    && e.c_photo == q12.c_photo
            });
            t.check("reg.err-row", row.is_some(), format!("matching ERR row: {row:?}"));
        }
        RegDisclosure::Accept(QuadrantDisclosure::Roll { q21, q22 }) => {
            let ms = [
                Payload::Vid(q21.vid).element(),
                Payload::Block(q21.block).element(),
                Payload::Ed(q21.ed.clone()).element(),
            ];
            let ok = verify_enc(pk, &ms, &[q22.cs_vid, q22.cs_block, q22.cs_ed], &q21.rho_enc2);
            t.check("reg.roll-encryption", ok, "ρ_enc2 over the fresh vid, block and ed ciphertexts");
        }
        RegDisclosure::Accept(QuadrantDisclosure::Link { q12, q22 }) => {
            let ok = AcceptReceipt::joined_eq_proof(q12, q22).is_some_and(|p| {
                let pairs = [(q12.c_vid, q22.cs_vid), (q12.c_block, q22.cs_block), (q12.c_ed, q22.cs_ed)];
                verify_eq(pk, &pairs, &p)
            });
            t.check("reg.equality", ok, "ρ_eq1 ⊕ ρ_eq2 over the three ciphertext pairs");
        }
    }
    t.finish()
}

/// `halves` are the identity and roll quadrants of the voter's own Accept
/// registration receipt; only the wrong-vid rejection needs them.
pub fn ind_cast_audit(board: &Board, world: &World, receipt: &CastReceipt, halves: Option<(&Q11, &Q21)>) -> AuditVerdict {
    let mut t = Trail::new(world);
    match receipt {
        CastReceipt::Reject { vid } => {
            let row = board.find_vid(*vid);
            t.check("cast.reject-fair", row.is_none(), format!("vid {vid} on the roll at {row:?}"));
        }
        CastReceipt::RejectWrongVid { vid, pre } => match halves {
            None => {
                t.check("cast.wrong-vid-fair", false, "voter did not supply their registration halves");
            }
            Some((q11, q21)) => {
                let other = q21.vid != *vid;
                let stranger = !world.matches(pre, &q11.photo);
                t.check(
                    "cast.wrong-vid-fair",
                    other || stranger,
                    format!("presented vid differs from registration: {other}; face differs: {stranger}"),
                );
            }
        },
        CastReceipt::RejectIneligible { vid, pre, ed, shares } => match board.find_vid(*vid) {
            None => {
                t.check("cast.ineligible-fair", false, format!("vid {vid} is not on the roll"));
            }
            Some(row) => {
                let c = board.er()[row].c_ed;
                let m = Payload::Ed(ed.clone()).element();
                let pk = match board.header() {
                    Ok(h) => &h.pk,
                    Err(e) => {
                        t.check("cast.ineligible-fair", false, e.to_string());
                        return t.finish();
                    }
                };
                let proven = verify_decryption(pk, &DecryptionClaim { ciphertext: &c, plaintext: &m, shares });
                let eligible = world.eligible(pre, ed.as_bytes());
                t.check(
                    "cast.ineligible-fair",
                    proven && !eligible,
                    format!("ed decryption proven: {proven}; ed makes the voter eligible: {eligible}"),
                );
            }
        },
        CastReceipt::DupCast { pre, photo } => {
            let same = world.matches(photo, pre);
            let live = world.live(photo, Env::Casting);
            t.check("cast.dup-fair", same && live, format!("prior photo matches: {same}; live in env_c: {live}"));
        }
        CastReceipt::Accept { vid, ev } => {
            let row = board.find_vid(*vid);
            let stored = row.and_then(|i| board.er()[i].ev);
            t.check("cast.ev-published", stored == Some(*ev), format!("row {row:?} carries the printed ev: {}", stored == Some(*ev)));
        }
    }
    t.finish()
}
