//! The universal audit: ERR sample, roll-preparation proofs, ER sample.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use super::{AuditVerdict, Trail};
use crate::board::{Board, BoardPhase, Column, Payload, Purpose, Recipient, Sample, Section};
use crate::crypto::{batch_verify_decryption, verify_decryption, verify_share, DecryptionClaim};
use crate::protocol::roll::err_columns;
use crate::protocol::stub::stub_valid;
use crate::protocol::{Backend, DecryptRequest, ProtocolError};
use crate::rng::Seed;
use crate::shuffle::{verify_shuffle, ShuffleProof};
use crate::world::{Env, PhotoToken, World};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnivAudit {
    pub verdict: AuditVerdict,
    pub err_sample: Sample,
    pub er_sample: Sample,
}

impl UnivAudit {
    pub fn err_stage(&self) -> bool {
        self.verdict.stage("err.")
    }

    pub fn roll_stage(&self) -> bool {
        self.verdict.stage("roll.")
    }

    pub fn er_stage(&self) -> bool {
        self.verdict.stage("er.")
    }
}

struct Ctx<'a, 'w> {
    board: &'a mut Board,
    backend: &'a mut Backend,
    trail: Trail<'w>,
    rng: crate::protocol::ProtocolRng,
}

impl Ctx<'_, '_> {
    fn decrypt(&mut self, purpose: Purpose, section: Section, row: usize, column: Column) -> Result<Payload, String> {
        let req = DecryptRequest { recipient: Recipient::Auditor, purpose, section, row, column };
        match self.backend.private_decrypt(self.board, req, &mut self.rng) {
            Ok(d) => {
                self.trail.decrypted(d.grant);
                Ok(d.payload)
            }
            Err(ProtocolError::BadShare { server }) => Err(format!("server {server} sent a bad decryption share")),
            Err(e) => Err(e.to_string()),
        }
    }
}

fn as_photo(p: &Payload) -> Option<&PhotoToken> {
    match p {
        Payload::Photo(t) => Some(t),
        _ => None,
    }
}

/// Runs after polls close. Decrypts only the H_α samples, each through a
/// logged authorization.
pub fn univ_audit(board: &mut Board, backend: &mut Backend, world: &World) -> Result<UnivAudit, ProtocolError> {
    board.expect_phase(BoardPhase::Closed)?;
    let marker = *board.marker(BoardPhase::Closed).expect("closed board has a marker");
    let seed = Seed(marker[..32].try_into().expect("32 bytes")).derive("univ-audit");
    let err_sample = board.sample_err()?;
    let er_sample = board.sample_er()?;
    let mut cx = Ctx { board, backend, trail: Trail::new(world), rng: seed.rng() };
    err_stage(&mut cx, world, &err_sample)?;
    roll_stage(&mut cx)?;
    er_stage(&mut cx, world, &er_sample)?;
    Ok(UnivAudit { verdict: cx.trail.finish(), err_sample, er_sample })
}

/// The ERR stage alone, available once registration has closed. The seed
/// differs from the full audit's, since the closed marker may not exist yet.
pub fn err_audit(board: &mut Board, backend: &mut Backend, world: &World) -> Result<AuditVerdict, ProtocolError> {
    let marker = *board
        .marker(BoardPhase::RollPreparation)
        .ok_or_else(|| ProtocolError::Config("registration is still open".into()))?;
    let seed = Seed(marker[..32].try_into().expect("32 bytes")).derive("err-audit");
    let sample = board.sample_err()?;
    let mut cx = Ctx { board, backend, trail: Trail::new(world), rng: seed.rng() };
    err_stage(&mut cx, world, &sample)?;
    Ok(cx.trail.finish())
}

fn err_stage(cx: &mut Ctx<'_, '_>, world: &World, sample: &Sample) -> Result<(), ProtocolError> {
    let mut uids = HashSet::new();
    let dup: Vec<&str> = cx.board.err().iter().filter(|e| !uids.insert(e.uid.as_str())).map(|e| e.uid.as_str()).collect();
    let detail = if dup.is_empty() { "all uids distinct".to_string() } else { format!("repeated uids: {dup:?}") };
    cx.trail.check("err.uid-unique", dup.is_empty(), detail);

    let dummies_allowed = cx.board.header()?.dummy_registration;
    let mut bad = vec![];
    let mut dummies = 0;
    for &row in &sample.indices {
        let uid = cx.board.err()[row].uid.clone();
        match cx.decrypt(Purpose::RegistrationAudit, Section::Err, row, Column::Photo) {
            Ok(Payload::Photo(p)) if world.has_uid(&p, &uid) => {}
            Ok(Payload::Bottom) if dummies_allowed => dummies += 1,
            Ok(p) => bad.push(format!("row {row}: photo {:?} does not carry uid {uid}", as_photo(&p).is_some())),
            Err(e) => bad.push(format!("row {row}: {e}")),
        }
    }
    let detail = format!(
        "{} rows sampled{}, {dummies} dummy rows; {}",
        sample.indices.len(),
        if sample.undersized { " (undersized)" } else { "" },
        if bad.is_empty() { "no failures".into() } else { bad.join("; ") }
    );
    cx.trail.check("err.photo-uid", bad.is_empty(), detail);
    Ok(())
}

fn roll_stage(cx: &mut Ctx<'_, '_>) -> Result<(), ProtocolError> {
    let board = &*cx.board;
    let er = board.er();
    let mut vids = HashSet::new();
    let dup: Vec<u64> = er.iter().filter(|r| !vids.insert(r.vid)).map(|r| r.vid).collect();
    cx.trail.check("roll.vid-unique", dup.is_empty(), format!("repeated vids: {dup:?}"));

    let n = board.err().len();
    let input = err_columns(board);
    let proof = ShuffleProof { steps: board.shuffle_steps().to_vec() };
    cx.backend.ck.ensure(n);
    let header = board.header()?;
    let shuffled = proof.steps.len() == header.kappa() && verify_shuffle(&header.pk, &cx.backend.ck, &input, &proof);
    cx.trail.check("roll.shuffle", shuffled, format!("{} steps over {n} rows", proof.steps.len()));

    let Some(out) = proof.output() else {
        cx.trail.check("roll.columns-match", false, "no shuffle output");
        cx.trail.check("roll.decryption", false, "no shuffle output");
        return Ok(());
    };
    let aligned = er.len() == n
        && out.len() == 4
        && er.iter().enumerate().all(|(i, r)| out[2][i] == r.c_ed && out[3][i] == r.c_photo);
    cx.trail.check("roll.columns-match", aligned, format!("{} roll rows for {n} registrations", er.len()));
    if !aligned || er.is_empty() {
        cx.trail.check("roll.decryption", false, "roll rows do not line up with the shuffle output");
        return Ok(());
    }

    let mut missing = vec![];
    let mut plain = vec![];
    for (i, r) in er.iter().enumerate() {
        match board.roll_decryption(i) {
            Some(d) => plain.push((i, Payload::Vid(r.vid).element(), Payload::Block(r.block).element(), d)),
            None => missing.push(i),
        }
    }
    let mut claims = Vec::with_capacity(2 * plain.len());
    for (i, m_vid, m_block, d) in &plain {
        claims.push(DecryptionClaim { ciphertext: &out[0][*i], plaintext: m_vid, shares: &d.vid });
        claims.push(DecryptionClaim { ciphertext: &out[1][*i], plaintext: m_block, shares: &d.block });
    }
    let pk = &header.pk;
    let batch_ok = !claims.is_empty() && batch_verify_decryption(pk, &claims, &mut cx.rng).unwrap_or(false);
    let mut bad = vec![];
    if !batch_ok {
        for c in &claims {
            if verify_decryption(pk, c) {
                continue;
            }
            let servers: Vec<u32> =
                c.shares.iter().filter(|s| !verify_share(pk, c.ciphertext, s)).map(|s| s.index).collect();
            if servers.is_empty() {
                bad.push("published plaintext does not match the shares".to_string());
            } else {
                bad.extend(servers.iter().map(|k| format!("server {k} sent a bad decryption share")));
            }
        }
        bad.sort();
        bad.dedup();
    }
    let ok = missing.is_empty() && batch_ok;
    let detail = if ok {
        format!("{} decryptions verified in one batch", claims.len())
    } else {
        format!("rows without decryptions: {missing:?}; {}", bad.join("; "))
    };
    cx.trail.check("roll.decryption", ok, detail);
    Ok(())
}

fn er_stage(cx: &mut Ctx<'_, '_>, world: &World, sample: &Sample) -> Result<(), ProtocolError> {
    let er = cx.board.er().to_vec();
    let unset: Vec<usize> = (0..er.len()).filter(|&i| er[i].resp.is_none() || er[i].booth.is_none()).collect();
    cx.trail.check("er.resp-set", unset.is_empty(), format!("rows without resp or booth: {unset:?}"));
    let unfilled: Vec<usize> =
        (0..er.len()).filter(|&i| er[i].resp == Some(true) && (er[i].ci.is_none() || er[i].ev.is_none())).collect();
    cx.trail.check("er.fill-complete", unfilled.is_empty(), format!("resp=1 rows with empty slots: {unfilled:?}"));
    let stuffed: Vec<usize> =
        (0..er.len()).filter(|&i| er[i].resp != Some(true) && (er[i].ci.is_some() || er[i].ev.is_some())).collect();
    cx.trail.check("er.no-vote-at-ineligible", stuffed.is_empty(), format!("resp=0 rows with casting data: {stuffed:?}"));

    let mut evs = HashSet::new();
    let clashes: Vec<usize> = (0..er.len()).filter(|&i| er[i].ev.is_some_and(|ev| !evs.insert(ev))).collect();
    cx.trail.check("er.ev-distinct", clashes.is_empty(), format!("rows repeating an earlier vote: {clashes:?}"));

    let stub_pk = cx.board.header()?.stub_pk;
    let mut bad = vec![];
    let (mut real, mut dummies, mut empty) = (0, 0, 0);
    for &row in &sample.indices {
        // Empty rows are er.fill-complete's concern.
        let (Some(ev), Some(_)) = (er[row].ev, er[row].ci) else {
            empty += 1;
            continue;
        };
        let rho = cx.decrypt(Purpose::RollAudit, Section::Ci, row, Column::RhoEv);
        let reg = cx.decrypt(Purpose::RollAudit, Section::Er, row, Column::Photo);
        let cast = cx.decrypt(Purpose::RollAudit, Section::Ci, row, Column::CastPhoto);
        let ed = cx.decrypt(Purpose::RollAudit, Section::Er, row, Column::Ed);
        let (rho, reg, cast, ed) = match (rho, reg, cast, ed) {
            (Ok(a), Ok(b), Ok(c), Ok(d)) => (a, b, c, d),
            (a, b, c, d) => {
                let errs: Vec<String> = [a, b, c, d].into_iter().filter_map(Result::err).collect();
                bad.push(format!("row {row}: {}", errs.join("; ")));
                continue;
            }
        };
        let valid = matches!(&rho, Payload::RhoEv(r) if stub_valid(&stub_pk, r, &ev));
        if !valid {
            dummies += 1;
            continue;
        }
        real += 1;
        let (Some(reg), Some(cast), Payload::Ed(ed)) = (as_photo(&reg), as_photo(&cast), &ed) else {
            bad.push(format!("row {row}: a counted vote without photographs or eligibility data"));
            continue;
        };
        let same = world.matches(cast, reg);
        let live = world.live(cast, Env::Casting);
        let eligible = world.eligible(reg, ed.as_bytes());
        if !(same && live && eligible) {
            bad.push(format!("row {row}: match {same}, live {live}, eligible {eligible}"));
        }
    }
    let detail = format!(
        "{} rows sampled{}, {real} counted votes, {dummies} dummies, {empty} empty; {}",
        sample.indices.len(),
        if sample.undersized { " (undersized)" } else { "" },
        if bad.is_empty() { "no failures".into() } else { bad.join("; ") }
    );
    cx.trail.check("er.cast-check", bad.is_empty(), detail);
    Ok(())
}
