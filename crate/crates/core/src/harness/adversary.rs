//! Corrupted officers and servers. Each one is the honest actor with one
//! deliberate deviation, applied to at most `budget` voters or rows.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use curve25519_dalek::ristretto::RistrettoPoint;
use rand::Rng;

use crate::board::{Eligibility, Payload, PayloadRegistry, Record};
use crate::crypto::{decryption_share, Ciphertext, CryptoError, DecryptionShare, Element, JointPublicKey, KeyShare};
use crate::protocol::cast::{honest_cast, honest_fill};
use crate::protocol::register::build_accept;
use crate::protocol::roll::honest_resp;
use crate::protocol::{
    Ballot, Booth, CastReceipt, Desk, EligibilityOfficer, HonestRegistrationOfficer, HonestServer, MixServer, Office,
    PollingOfficer, Presentation, ProtocolError, ProtocolRng, RegReceipt, RegistrationOfficer,
};
use crate::shuffle::{Columns, CommitmentKey, ShuffleStep};
use crate::world::{Authority, Env, PhotoToken, SubjectId};

/// How many more times a corrupted actor deviates; shared between the
/// officers of one role.
#[derive(Clone, Debug)]
pub struct Budget(Arc<AtomicUsize>);

impl Budget {
    pub fn new(n: usize) -> Self {
        Self(Arc::new(AtomicUsize::new(n)))
    }

    pub fn take(&self) -> bool {
        self.0.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1)).is_ok()
    }

    pub fn left(&self) -> usize {
        self.0.load(Ordering::SeqCst)
    }
}

enum Visit {
    Done(RegReceipt),
    Target(PhotoToken),
}

/// The honest desk, unless this is a first valid registration and the
/// budget allows a deviation.
fn visit(desk: &mut Desk<'_>, claim: &Presentation, budget: &Budget) -> Result<Visit, ProtocolError> {
    if desk.find_uid(&claim.uid).is_some() || budget.left() == 0 {
        return HonestRegistrationOfficer.register(desk, claim).map(Visit::Done);
    }
    let pre = desk.capture(Env::PreRegistration)?;
    if !desk.world.has_uid(&pre, &claim.uid) {
        return Ok(Visit::Done(RegReceipt::Reject { uid: claim.uid.clone(), pre }));
    }
    budget.take();
    Ok(Visit::Target(pre))
}

/// Accepts a voter again even when their uid is already on ERR.
pub struct DuplicatingRo;

impl RegistrationOfficer for DuplicatingRo {
    fn register(&mut self, desk: &mut Desk<'_>, claim: &Presentation) -> Result<RegReceipt, ProtocolError> {
        let pre = desk.capture(Env::PreRegistration)?;
        if !desk.world.has_uid(&pre, &claim.uid) {
            return Ok(RegReceipt::Reject { uid: claim.uid.clone(), pre });
        }
        let photo = desk.capture(Env::Registration)?;
        let vid = desk.fresh_vid()?;
        let (entry, receipt) =
            build_accept(desk.backend, desk.rng, &claim.uid, &photo, vid, claim.block, &claim.ed, &claim.ed)?;
        desk.board.append(Record::Err(entry))?;
        Ok(RegReceipt::Accept(Box::new(receipt)))
    }
}

/// Honest at the desk; when registration closes, adds rows under unused
/// uids carrying an accomplice's face.
pub struct PhantomRo {
    pub budget: Budget,
    pub accomplice: SubjectId,
    pub ed: String,
}

impl RegistrationOfficer for PhantomRo {
    fn register(&mut self, desk: &mut Desk<'_>, claim: &Presentation) -> Result<RegReceipt, ProtocolError> {
        HonestRegistrationOfficer.register(desk, claim)
    }

    fn close(&mut self, desk: &mut Desk<'_>) -> Result<(), ProtocolError> {
        let blocks = desk.board.header()?.blocks;
        let taken: HashSet<String> = desk.board.err().iter().map(|e| e.uid.clone()).collect();
        let mut k = 0u64;
        while self.budget.take() {
            let uid = loop {
                k += 1;
                let u = format!("P{k:010}");
                if !taken.contains(&u) {
                    break u;
                }
            };
            let photo = desk.world.capture(self.accomplice, Env::Registration, Authority::Adversary)?;
            let vid = desk.fresh_vid()?;
            let block = desk.rng.gen_range(1..=blocks);
            let (entry, _) = build_accept(desk.backend, desk.rng, &uid, &photo, vid, block, &self.ed, &self.ed)?;
            desk.board.append(Record::Err(entry))?;
        }
        Ok(())
    }
}

/// Prints the voter's ed on the receipt but uploads a different one.
pub struct WrongEdRo {
    pub budget: Budget,
}

impl RegistrationOfficer for WrongEdRo {
    fn register(&mut self, desk: &mut Desk<'_>, claim: &Presentation) -> Result<RegReceipt, ProtocolError> {
        if let Visit::Done(r) = visit(desk, claim, &self.budget)? {
            return Ok(r);
        }
        let photo = desk.capture(Env::Registration)?;
        let vid = desk.fresh_vid()?;
        let forged = format!("{};forged", claim.ed);
        let (entry, receipt) =
            build_accept(desk.backend, desk.rng, &claim.uid, &photo, vid, claim.block, &claim.ed, &forged)?;
        desk.board.append(Record::Err(entry))?;
        Ok(RegReceipt::Accept(Box::new(receipt)))
    }
}

/// Turns voters away with a duplicate-registration claim. Having no
/// registration photograph of them, it shows the pre-registration one.
pub struct DenyingRo {
    pub budget: Budget,
}

impl RegistrationOfficer for DenyingRo {
    fn register(&mut self, desk: &mut Desk<'_>, claim: &Presentation) -> Result<RegReceipt, ProtocolError> {
        let pre = match visit(desk, claim, &self.budget)? {
            Visit::Done(r) => return Ok(r),
            Visit::Target(pre) => pre,
        };
        Ok(RegReceipt::DupReg { pre: pre, prior: pre })
    }
}

/// Issues a correct Accept receipt but never uploads the row.
pub struct DroppingRo {
    pub budget: Budget,
}

impl RegistrationOfficer for DroppingRo {
    fn register(&mut self, desk: &mut Desk<'_>, claim: &Presentation) -> Result<RegReceipt, ProtocolError> {
        if let Visit::Done(r) = visit(desk, claim, &self.budget)? {
            return Ok(r);
        }
        let photo = desk.capture(Env::Registration)?;
        let vid = desk.fresh_vid()?;
        let (_, receipt) = build_accept(desk.backend, desk.rng, &claim.uid, &photo, vid, claim.block, &claim.ed, &claim.ed)?;
        Ok(RegReceipt::Accept(Box::new(receipt)))
    }
}

/// Approves every row without looking.
pub struct ApprovingEo;

impl EligibilityOfficer for ApprovingEo {
    fn review(&mut self, office: &mut Office<'_>, row: usize) -> Result<(), ProtocolError> {
        let booth = office.next_booth()?;
        office.board.append(Record::Eligibility(Eligibility { row: row as u32, resp: true, booth }))?;
        Ok(())
    }
}

/// Marks eligible rows ineligible.
pub struct DenyingEo {
    pub budget: Budget,
}

impl EligibilityOfficer for DenyingEo {
    fn review(&mut self, office: &mut Office<'_>, row: usize) -> Result<(), ProtocolError> {
        let resp = honest_resp(office, row)? && !self.budget.take();
        let booth = office.next_booth()?;
        office.board.append(Record::Eligibility(Eligibility { row: row as u32, resp, booth }))?;
        Ok(())
    }
}

/// Claims the voter already cast, showing their pre-casting photograph.
pub struct DupCastPo {
    pub budget: Budget,
}

impl PollingOfficer for DupCastPo {
    fn cast(&mut self, booth: &mut Booth<'_>, ballot: &Ballot) -> Result<CastReceipt, ProtocolError> {
        let row = booth.row_of(ballot.vid)?;
        let fresh = row.is_some_and(|i| booth.board.er()[i].resp == Some(true) && booth.board.er()[i].ci.is_none());
        if !fresh || !self.budget.take() {
            return honest_cast(booth, ballot);
        }
        let pre = booth.capture(Env::PreCasting)?;
        Ok(CastReceipt::DupCast { pre: pre, photo: pre })
    }

    fn close(&mut self, booth: &mut Booth<'_>) -> Result<usize, ProtocolError> {
        honest_fill(booth)
    }
}

/// Publishes a vote of its own choosing while printing the voter's.
pub struct SubstitutingPo {
    pub budget: Budget,
}

impl PollingOfficer for SubstitutingPo {
    fn cast(&mut self, booth: &mut Booth<'_>, ballot: &Ballot) -> Result<CastReceipt, ProtocolError> {
        let row = booth.row_of(ballot.vid)?;
        let fresh = row.is_some_and(|i| booth.board.er()[i].resp == Some(true) && booth.board.er()[i].ci.is_none());
        if !fresh || !self.budget.take() {
            return honest_cast(booth, ballot);
        }
        let own = Ballot { vid: ballot.vid, vote: booth.stub.cast(booth.rng) };
        match honest_cast(booth, &own)? {
            CastReceipt::Accept { vid, .. } => Ok(CastReceipt::Accept { vid, ev: ballot.vote.ev }),
            other => Ok(other),
        }
    }

    fn close(&mut self, booth: &mut Booth<'_>) -> Result<usize, ProtocolError> {
        honest_fill(booth)
    }
}

/// At closing, casts valid votes at absentee rows under an accomplice's
/// casting photograph.
pub struct StuffingPo {
    pub budget: Budget,
    pub accomplice: SubjectId,
}

impl PollingOfficer for StuffingPo {
    fn cast(&mut self, booth: &mut Booth<'_>, ballot: &Ballot) -> Result<CastReceipt, ProtocolError> {
        honest_cast(booth, ballot)
    }

    fn close(&mut self, booth: &mut Booth<'_>) -> Result<usize, ProtocolError> {
        for row in booth.absentees() {
            if !self.budget.take() {
                break;
            }
            let photo = booth.world.capture(self.accomplice, Env::Casting, Authority::Adversary)?;
            let vote = booth.stub.cast(booth.rng);
            booth.publish(row, Payload::Photo(photo), Payload::RhoEv(vote.rho_ev), vote.ev)?;
        }
        honest_fill(booth)
    }
}

/// Leaves absentee rows empty.
pub struct LazyPo;

impl PollingOfficer for LazyPo {
    fn cast(&mut self, booth: &mut Booth<'_>, ballot: &Ballot) -> Result<CastReceipt, ProtocolError> {
        honest_cast(booth, ballot)
    }

    fn close(&mut self, _: &mut Booth<'_>) -> Result<usize, ProtocolError> {
        Ok(0)
    }
}

/// Mixes honestly, then swaps two eligibility-data ciphertexts in its
/// output without touching the proof.
pub struct TamperingServer {
    pub inner: HonestServer,
}

impl MixServer for TamperingServer {
    fn index(&self) -> u32 {
        self.inner.index()
    }

    fn shuffle(
        &mut self,
        pk: &JointPublicKey,
        ck: &CommitmentKey,
        input: &Columns,
        rng: &mut ProtocolRng,
    ) -> Result<ShuffleStep, CryptoError> {
        let mut step = self.inner.shuffle(pk, ck, input, rng)?;
        if step.output[2].len() >= 2 {
            step.output[2].swap(0, 1);
        }
        Ok(step)
    }

    fn decryption_share(&mut self, c: &Ciphertext, r: &mut PayloadRegistry, rng: &mut ProtocolRng) -> DecryptionShare {
        self.inner.decryption_share(c, r, rng)
    }
}

/// The last server, colluding with the others' keys: makes the first
/// `budget` vids of its output decrypt to vids nobody registered.
pub struct ForgingServer {
    pub key: KeyShare,
    pub others: Vec<KeyShare>,
    pub budget: Budget,
    targets: Vec<Ciphertext>,
}

impl ForgingServer {
    pub fn new(key: KeyShare, others: Vec<KeyShare>, budget: Budget) -> Self {
        Self { key, others, budget, targets: vec![] }
    }
}

impl MixServer for ForgingServer {
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
        let step = HonestServer::new(self.key.clone()).shuffle(pk, ck, input, rng)?;
        self.targets = step.output[0].iter().take(self.budget.left()).copied().collect();
        Ok(step)
    }

    fn decryption_share(&mut self, c: &Ciphertext, registry: &mut PayloadRegistry, rng: &mut ProtocolRng) -> DecryptionShare {
        let honest = decryption_share(&self.key, c, rng);
        if !self.targets.contains(c) || !self.budget.take() {
            return honest;
        }
        let forged = registry.encode(&Payload::Vid(rng.gen_range(0..10_000_000_000)));
        let others: RistrettoPoint = self.others.iter().map(|k| c.c1.point() * k.secret()).sum();
        let d = Element::from_point(c.c2.point() - forged.point() - others);
        DecryptionShare { d, ..honest }
    }
}
