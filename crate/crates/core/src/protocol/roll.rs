//! Roll preparation: mixing, public decryption of vid and block, and the
//! eligibility officers' review.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use super::backend::{Backend, DecryptRequest};
use super::{ProtocolError, ProtocolRng};
use crate::board::{
    Board, BoardPhase, Column, ErRow, Eligibility, Payload, Purpose, Record, Recipient, RollDecryption, Section,
};
use crate::shuffle::Columns;
use crate::world::World;

/// What an EO of one block can touch.
pub struct Office<'a> {
    pub block: u32,
    pub board: &'a mut Board,
    pub backend: &'a mut Backend,
    pub world: &'a World,
    pub rng: &'a mut ProtocolRng,
}

impl Office<'_> {
    pub fn decrypt(&mut self, row: usize, column: Column) -> Result<Payload, ProtocolError> {
        let req = DecryptRequest {
            recipient: Recipient::EligibilityOfficer(self.block),
            purpose: Purpose::EligibilityCheck,
            section: Section::Er,
            row,
            column,
        };
        Ok(self.backend.private_decrypt(self.board, req, self.rng)?.payload)
    }

    /// Next booth of this block in round-robin order.
    pub fn next_booth(&self) -> Result<u32, ProtocolError> {
        let header = self.board.header()?;
        let assigned = self.board.er().iter().filter(|e| e.block == self.block && e.booth.is_some()).count() as u32;
        Ok(header.booths_of(self.block).start() + assigned % header.booths_per_block)
    }
}

pub trait EligibilityOfficer: Send {
    /// Sets resp and the booth for one roll row of this officer's block.
    fn review(&mut self, office: &mut Office<'_>, row: usize) -> Result<(), ProtocolError>;
}

/// G_elg on the decrypted photograph and eligibility data.
pub fn honest_resp(office: &mut Office<'_>, row: usize) -> Result<bool, ProtocolError> {
    let photo = office.decrypt(row, Column::Photo)?;
    let ed = office.decrypt(row, Column::Ed)?;
    Ok(match (photo, ed) {
        (Payload::Photo(p), Payload::Ed(ed)) => office.world.eligible(&p, ed.as_bytes()),
        _ => false,
    })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HonestEligibilityOfficer;

impl EligibilityOfficer for HonestEligibilityOfficer {
    fn review(&mut self, office: &mut Office<'_>, row: usize) -> Result<(), ProtocolError> {
        let resp = honest_resp(office, row)?;
        let booth = office.next_booth()?;
        office.board.append(Record::Eligibility(Eligibility { row: row as u32, resp, booth }))?;
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RollSummary {
    pub rows: usize,
    pub eligible: usize,
    pub shuffle: Duration,
    pub decrypt: Duration,
    pub review: Duration,
}

/// The four ERR columns, column-major.
pub fn err_columns(board: &Board) -> Columns {
    let mut cols: Columns = vec![Vec::with_capacity(board.err().len()); 4];
    for e in board.err() {
        for (col, c) in cols.iter_mut().zip(e.columns()) {
            col.push(c);
        }
    }
    cols
}

/// Mixes ERR, publishes the roll with its decryption shares, and hands each
/// row to its block's EO. Expects the board to have entered roll
/// preparation; leaves it there.
pub fn prepare_roll(
    board: &mut Board,
    backend: &mut Backend,
    world: &World,
    officers: &mut [Box<dyn EligibilityOfficer>],
    rng: &mut ProtocolRng,
) -> Result<RollSummary, ProtocolError> {
    board.expect_phase(BoardPhase::RollPreparation)?;
    if !board.er().is_empty() || !board.shuffle_steps().is_empty() {
        return Err(ProtocolError::Alarm("roll already prepared".into()));
    }
    let n = board.err().len();
    if n == 0 {
        return Err(ProtocolError::Config("no registrations to mix".into()));
    }
    let mut summary = RollSummary { rows: n, ..Default::default() };

    let t = Instant::now();
    backend.ck.ensure(n);
    let mut cols = err_columns(board);
    for k in 0..backend.kappa() {
        let step = backend.servers[k].shuffle(&backend.pk, &backend.ck, &cols, rng)?;
        cols = step.output.clone();
        board.append(Record::ShuffleStep(step))?;
    }
    summary.shuffle = t.elapsed();

    let t = Instant::now();
    let mut seen = HashSet::with_capacity(n);
    let mut decryptions = Vec::with_capacity(n);
    for i in 0..n {
        let (m_vid, s_vid) = backend.public_decrypt(&cols[0][i], rng);
        let (m_block, s_block) = backend.public_decrypt(&cols[1][i], rng);
        let vid = match backend.registry.decode_public(&m_vid) {
            Ok(Payload::Vid(v)) => v,
            _ => return Err(ProtocolError::Alarm(format!("roll row {i}: vid column does not decrypt to a vid"))),
        };
        let block = match backend.registry.decode_public(&m_block) {
            Ok(Payload::Block(b)) => b,
            _ => return Err(ProtocolError::Alarm(format!("roll row {i}: block column does not decrypt to a block"))),
        };
        if !seen.insert(vid) {
            return Err(ProtocolError::Alarm(format!("duplicate vid {vid} on the roll")));
        }
        board.append(Record::Roll(ErRow { vid, block, c_ed: cols[2][i], c_photo: cols[3][i] }))?;
        decryptions.push(RollDecryption { row: i as u32, vid: s_vid, block: s_block });
    }
    for d in decryptions {
        board.append(Record::RollDecryption(d))?;
    }
    summary.decrypt = t.elapsed();

    let t = Instant::now();
    for row in 0..n {
        let block = board.er()[row].block;
        let Some(eo) = officers.get_mut(block as usize - 1) else {
            continue;
        };
        let mut office = Office { block, board, backend, world, rng };
        eo.review(&mut office, row)?;
    }
    summary.review = t.elapsed();
    summary.eligible = board.er().iter().filter(|e| e.resp == Some(true)).count();
    Ok(summary)
}
