//! Casting at a polling booth, and the dummy fill when polls close.

use super::backend::{Backend, DecryptRequest, Decrypted};
use super::receipts::CastReceipt;
use super::stub::{stub_valid, StubAuthority, StubVote};
use super::{ProtocolError, ProtocolRng, Session};
use crate::board::{Board, BoardPhase, CastInfo, CastInfoRecord, Column, Payload, Purpose, Record, Recipient, Section, VoteRecord};
use crate::world::{Env, PhotoToken, World};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ballot {
    pub vid: u64,
    pub vote: StubVote,
}

/// What the PO of one booth can touch.
pub struct Booth<'a> {
    pub booth: u32,
    pub board: &'a mut Board,
    pub backend: &'a mut Backend,
    pub world: &'a World,
    pub stub: &'a StubAuthority,
    pub session: Option<&'a mut Session>,
    pub rng: &'a mut ProtocolRng,
}

impl Booth<'_> {
    pub fn capture(&mut self, env: Env) -> Result<PhotoToken, ProtocolError> {
        let s = self.session.as_deref_mut().ok_or_else(|| ProtocolError::Alarm("no voter at the booth".into()))?;
        Ok(s.capture(self.world, env)?)
    }

    pub fn decrypt(&mut self, section: Section, row: usize, column: Column) -> Result<Decrypted, ProtocolError> {
        let req = DecryptRequest {
            recipient: Recipient::PollingOfficer(self.booth),
            purpose: Purpose::CastCheck,
            section,
            row,
            column,
        };
        self.backend.private_decrypt(self.board, req, self.rng)
    }

    pub fn decrypt_photo(&mut self, section: Section, row: usize, column: Column) -> Result<PhotoToken, ProtocolError> {
        match self.decrypt(section, row, column)?.payload {
            Payload::Photo(p) => Ok(p),
            other => Err(ProtocolError::Alarm(format!("{section:?} row {row} {column:?} decrypts to {other:?}"))),
        }
    }

    /// Row of `vid`, which must belong to this booth.
    pub fn row_of(&self, vid: u64) -> Result<Option<usize>, ProtocolError> {
        let Some(row) = self.board.find_vid(vid) else {
            return Ok(None);
        };
        match self.board.er()[row].booth {
            Some(l) if l == self.booth => Ok(Some(row)),
            other => Err(ProtocolError::Config(format!("vid {vid} is assigned to booth {other:?}, not {}", self.booth))),
        }
    }

    /// Publishes casting information and the vote at `row`.
    pub fn publish(&mut self, row: usize, photo: Payload, rho_ev: Payload, ev: crate::crypto::Ciphertext) -> Result<(), ProtocolError> {
        let (c_photo, ..) = self.backend.encrypt_payload(&photo, self.rng);
        let (c_rho_ev, ..) = self.backend.encrypt_payload(&rho_ev, self.rng);
        let row = row as u32;
        self.board.append(Record::CastInfo(CastInfoRecord { row, info: CastInfo { c_photo, c_rho_ev } }))?;
        self.board.append(Record::Vote(VoteRecord { row, ev }))?;
        Ok(())
    }

    /// Rows of this booth with resp = 1 and nothing cast.
    pub fn absentees(&self) -> Vec<usize> {
        let er = self.board.er();
        (0..er.len())
            .filter(|&i| er[i].booth == Some(self.booth) && er[i].resp == Some(true) && er[i].ci.is_none() && er[i].ev.is_none())
            .collect()
    }
}

pub trait PollingOfficer: Send {
    fn cast(&mut self, booth: &mut Booth<'_>, ballot: &Ballot) -> Result<CastReceipt, ProtocolError>;

    /// Fills absentee rows; returns how many.
    fn close(&mut self, booth: &mut Booth<'_>) -> Result<usize, ProtocolError>;
}

pub fn honest_cast(booth: &mut Booth<'_>, ballot: &Ballot) -> Result<CastReceipt, ProtocolError> {
    let vid = ballot.vid;
    let pre = booth.capture(Env::PreCasting)?;
    let Some(row) = booth.row_of(vid)? else {
        return Ok(CastReceipt::Reject { vid });
    };
    let registered = booth.decrypt_photo(Section::Er, row, Column::Photo)?;
    if !booth.world.matches(&registered, &pre) {
        return Ok(CastReceipt::RejectWrongVid { vid, pre });
    }
    let entry = booth.board.er()[row].clone();
    if entry.resp != Some(true) {
        let d = booth.decrypt(Section::Er, row, Column::Ed)?;
        let ed = match d.payload {
            Payload::Ed(ed) => ed,
            other => return Err(ProtocolError::Alarm(format!("roll row {row} ed decrypts to {other:?}"))),
        };
        return Ok(CastReceipt::RejectIneligible { vid, pre, ed, shares: d.shares });
    }
    if entry.ci.is_some() {
        let photo = booth.decrypt_photo(Section::Ci, row, Column::CastPhoto)?;
        if !booth.world.matches(&photo, &pre) {
            return Err(ProtocolError::Alarm(format!("roll row {row} was cast by someone else")));
        }
        return Ok(CastReceipt::DupCast { pre, photo });
    }
    if !stub_valid(&booth.board.header()?.stub_pk, &ballot.vote.rho_ev, &ballot.vote.ev) {
        return Err(ProtocolError::Alarm(format!("vote offered for vid {vid} carries an invalid proof")));
    }
    let photo = booth.capture(Env::Casting)?;
    booth.publish(row, Payload::Photo(photo), Payload::RhoEv(ballot.vote.rho_ev.clone()), ballot.vote.ev)?;
    Ok(CastReceipt::Accept { vid, ev: ballot.vote.ev })
}

/// CI = (enc ⊥, enc ⊥) and a dummy vote at every absentee row.
pub fn honest_fill(booth: &mut Booth<'_>) -> Result<usize, ProtocolError> {
    let rows = booth.absentees();
    for &row in &rows {
        let dummy = booth.stub.dummy(booth.rng);
        booth.publish(row, Payload::Bottom, Payload::Bottom, dummy.ev)?;
    }
    Ok(rows.len())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HonestPollingOfficer;

impl PollingOfficer for HonestPollingOfficer {
    fn cast(&mut self, booth: &mut Booth<'_>, ballot: &Ballot) -> Result<CastReceipt, ProtocolError> {
        honest_cast(booth, ballot)
    }

    fn close(&mut self, booth: &mut Booth<'_>) -> Result<usize, ProtocolError> {
        honest_fill(booth)
    }
}

/// Every PO fills its absentee rows, then the board enters the closed phase.
/// Returns the number of dummy fills.
pub fn close_polls(
    board: &mut Board,
    backend: &mut Backend,
    world: &World,
    stub: &StubAuthority,
    officers: &mut [Box<dyn PollingOfficer>],
    rng: &mut ProtocolRng,
) -> Result<usize, ProtocolError> {
    board.expect_phase(BoardPhase::Casting)?;
    let mut filled = 0;
    for (i, po) in officers.iter_mut().enumerate() {
        let mut booth = Booth { booth: i as u32 + 1, board, backend, world, stub, session: None, rng };
        filled += po.close(&mut booth)?;
    }
    board.enter(BoardPhase::Closed)?;
    Ok(filled)
}
