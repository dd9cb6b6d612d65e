//! What a bare-handed voter carries, and their manual receipt checks.
//!
//! The checks compare printed values against what the voter said and saw.
//! One rule sits on top of the printed-value comparisons: a voter who has
//! just been photographed in the official registration (casting) environment
//! does not accept a rejection, since that photograph was only ever given in
//! exchange for an Accept receipt.

use serde::{Deserialize, Serialize};

use super::receipts::{CastReceipt, RegReceipt};
use super::stub::StubVote;
use super::Presentation;
use crate::crypto::Ciphertext;
use crate::world::{Env, PhotoToken, SubjectId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoterCard {
    pub subject: SubjectId,
    pub presented: Presentation,
    pub vid: Option<u64>,
    pub reg_receipt: Option<RegReceipt>,
    pub rvalid: Option<bool>,
    pub cast_receipt: Option<CastReceipt>,
    pub cvalid: Option<bool>,
    /// The encrypted vote handed to the polling officer.
    pub ev: Option<Ciphertext>,
}

impl VoterCard {
    pub fn new(subject: SubjectId, presented: Presentation) -> Self {
        Self { subject, presented, vid: None, reg_receipt: None, rvalid: None, cast_receipt: None, cvalid: None, ev: None }
    }

    pub fn accept_receipt(&self) -> Option<&super::AcceptReceipt> {
        self.reg_receipt.as_ref().and_then(RegReceipt::accept)
    }
}

fn saw(seen: &[PhotoToken], p: &PhotoToken, env: Env) -> bool {
    p.env() == env && seen.contains(p)
}

fn gave(seen: &[PhotoToken], env: Env) -> bool {
    seen.iter().any(|p| p.env() == env)
}

/// rvalid: the voter's check of a registration receipt.
pub fn rvalid(claim: &Presentation, seen: &[PhotoToken], receipt: &RegReceipt) -> bool {
    match receipt {
        RegReceipt::Reject { uid, pre } => {
            *uid == claim.uid && saw(seen, pre, Env::PreRegistration) && !gave(seen, Env::Registration)
        }
        RegReceipt::DupReg { pre, .. } => saw(seen, pre, Env::PreRegistration) && !gave(seen, Env::Registration),
        RegReceipt::Accept(a) => {
            a.q11.uid == claim.uid
                && saw(seen, &a.q11.photo, Env::Registration)
                && a.q21.block == claim.block
                && a.q21.ed == claim.ed
        }
    }
}

/// cvalid: the voter's check of a cast receipt.
pub fn cvalid(vid: u64, vote: &StubVote, seen: &[PhotoToken], receipt: &CastReceipt) -> bool {
    let no_cast_photo = !gave(seen, Env::Casting);
    match receipt {
        CastReceipt::Reject { vid: v } => *v == vid && no_cast_photo,
        CastReceipt::RejectWrongVid { vid: v, pre } | CastReceipt::RejectIneligible { vid: v, pre, .. } => {
            *v == vid && saw(seen, pre, Env::PreCasting) && no_cast_photo
        }
        CastReceipt::DupCast { pre, .. } => saw(seen, pre, Env::PreCasting) && no_cast_photo,
        CastReceipt::Accept { vid: v, ev } => *v == vid && *ev == vote.ev,
    }
}
