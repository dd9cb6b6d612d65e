//! Board record types and their canonical encodings.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::crypto::{Ciphertext, DecryptionShare, Element, JointPublicKey};
use crate::encoding::{Decode, DecodeError, Encode, Reader, Writer};
use crate::shuffle::ShuffleStep;

pub const BOARD_FORMAT: u32 = 1;

/// Parameters pinned at setup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoardHeader {
    pub format: u32,
    pub election: String,
    pub pk: JointPublicKey,
    /// Universal-audit sample size, fixed for every invocation.
    pub alpha: u32,
    pub vid_digits: u32,
    pub blocks: u32,
    pub booths_per_block: u32,
    pub envs: Vec<String>,
    pub generator_seed: String,
    /// Public key of the stand-in voting protocol.
    pub stub_pk: Element,
    pub dummy_registration: bool,
    pub violation_mode: bool,
}

impl BoardHeader {
    pub fn kappa(&self) -> usize {
        self.pk.kappa()
    }

    /// Booth ids of `block`, numbered globally from 1.
    pub fn booths_of(&self, block: u32) -> std::ops::RangeInclusive<u32> {
        let first = (block - 1) * self.booths_per_block + 1;
        first..=block * self.booths_per_block
    }

    pub fn booth_count(&self) -> u32 {
        self.blocks * self.booths_per_block
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BoardPhase {
    Registration,
    RollPreparation,
    Casting,
    Closed,
}

impl BoardPhase {
    pub const ALL: [BoardPhase; 4] =
        [BoardPhase::Registration, BoardPhase::RollPreparation, BoardPhase::Casting, BoardPhase::Closed];

    pub fn name(self) -> &'static str {
        match self {
            BoardPhase::Registration => "registration",
            BoardPhase::RollPreparation => "roll-preparation",
            BoardPhase::Casting => "casting",
            BoardPhase::Closed => "closed",
        }
    }

    fn code(self) -> u8 {
        self as u8 + 1
    }

    fn from_code(c: u8) -> Result<Self, DecodeError> {
        Self::ALL.get((c as usize).wrapping_sub(1)).copied().ok_or(DecodeError::InvalidTag(c))
    }

    pub fn next(self) -> Option<Self> {
        Self::ALL.get(self as usize + 1).copied()
    }
}

impl fmt::Display for BoardPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Entering `phase`; `digest` is the board digest just before the marker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseMarker {
    pub phase: BoardPhase,
    pub digest: [u8; 64],
}

/// One registration request.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrEntry {
    pub uid: String,
    pub c_vid: Ciphertext,
    pub c_block: Ciphertext,
    pub c_ed: Ciphertext,
    pub c_photo: Ciphertext,
}

impl ErrEntry {
    /// The four columns in shuffle order.
    pub fn columns(&self) -> [Ciphertext; 4] {
        [self.c_vid, self.c_block, self.c_ed, self.c_photo]
    }
}

/// Static part of a roll row, as published after mixing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErRow {
    pub vid: u64,
    pub block: u32,
    pub c_ed: Ciphertext,
    pub c_photo: Ciphertext,
}

/// Decryption shares for the public vid and block columns of one row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RollDecryption {
    pub row: u32,
    pub vid: Vec<DecryptionShare>,
    pub block: Vec<DecryptionShare>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Eligibility {
    pub row: u32,
    pub resp: bool,
    pub booth: u32,
}

/// Casting information: encrypted casting photo and encrypted vote proof.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CastInfo {
    pub c_photo: Ciphertext,
    pub c_rho_ev: Ciphertext,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CastInfoRecord {
    pub row: u32,
    pub info: CastInfo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VoteRecord {
    pub row: u32,
    pub ev: Ciphertext,
}

/// A roll row with its update slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErEntry {
    pub vid: u64,
    pub block: u32,
    pub c_ed: Ciphertext,
    pub c_photo: Ciphertext,
    pub resp: Option<bool>,
    pub booth: Option<u32>,
    pub ci: Option<CastInfo>,
    pub ev: Option<Ciphertext>,
}

impl From<ErRow> for ErEntry {
    fn from(r: ErRow) -> Self {
        Self { vid: r.vid, block: r.block, c_ed: r.c_ed, c_photo: r.c_photo, resp: None, booth: None, ci: None, ev: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Recipient {
    RegistrationOfficer(u32),
    EligibilityOfficer(u32),
    PollingOfficer(u32),
    Auditor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Purpose {
    DuplicateCheck,
    EligibilityCheck,
    CastCheck,
    RegistrationAudit,
    RollAudit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Section {
    Header,
    Err,
    Er,
    RollProof,
    Ci,
    Ev,
    Auth,
}

impl Section {
    pub const ALL: [Section; 7] =
        [Section::Header, Section::Err, Section::Er, Section::RollProof, Section::Ci, Section::Ev, Section::Auth];

    pub fn file_name(self) -> &'static str {
        match self {
            Section::Header => "header.log",
            Section::Err => "err.log",
            Section::Er => "er.log",
            Section::RollProof => "roll-proof.log",
            Section::Ci => "ci.log",
            Section::Ev => "ev.log",
            Section::Auth => "auth.log",
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Section::Header => "header",
            Section::Err => "err",
            Section::Er => "er",
            Section::RollProof => "roll-proof",
            Section::Ci => "ci",
            Section::Ev => "ev",
            Section::Auth => "auth",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Column {
    Photo,
    Ed,
    CastPhoto,
    RhoEv,
}

/// A logged private-decryption authorization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthEntry {
    pub recipient: Recipient,
    pub purpose: Purpose,
    pub section: Section,
    pub row: u32,
    pub column: Column,
    /// The decrypted plaintext element, i.e. the registry key released.
    pub element: Element,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Record {
    Header(BoardHeader),
    Phase(PhaseMarker),
    Err(ErrEntry),
    ShuffleStep(ShuffleStep),
    Roll(ErRow),
    RollDecryption(RollDecryption),
    Eligibility(Eligibility),
    CastInfo(CastInfoRecord),
    Vote(VoteRecord),
    Auth(AuthEntry),
}

impl Record {
    pub fn section(&self) -> Section {
        match self {
            Record::Header(_) | Record::Phase(_) => Section::Header,
            Record::Err(_) => Section::Err,
            Record::Roll(_) | Record::Eligibility(_) => Section::Er,
            Record::ShuffleStep(_) | Record::RollDecryption(_) => Section::RollProof,
            Record::CastInfo(_) => Section::Ci,
            Record::Vote(_) => Section::Ev,
            Record::Auth(_) => Section::Auth,
        }
    }

    fn tag(&self) -> u8 {
        match self {
            Record::Header(_) => 1,
            Record::Phase(_) => 2,
            Record::Err(_) => 3,
            Record::ShuffleStep(_) => 4,
            Record::Roll(_) => 5,
            Record::RollDecryption(_) => 6,
            Record::Eligibility(_) => 7,
            Record::CastInfo(_) => 8,
            Record::Vote(_) => 9,
            Record::Auth(_) => 10,
        }
    }
}

impl Encode for BoardHeader {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.format);
        w.str(&self.election);
        w.put(&self.pk);
        w.u32(self.alpha);
        w.u32(self.vid_digits);
        w.u32(self.blocks);
        w.u32(self.booths_per_block);
        w.seq(&self.envs);
        w.str(&self.generator_seed);
        w.put(&self.stub_pk);
        w.bool(self.dummy_registration);
        w.bool(self.violation_mode);
    }
}

impl Decode for BoardHeader {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            format: r.u32()?,
            election: r.string()?,
            pk: r.get()?,
            alpha: r.u32()?,
            vid_digits: r.u32()?,
            blocks: r.u32()?,
            booths_per_block: r.u32()?,
            envs: r.seq()?,
            generator_seed: r.string()?,
            stub_pk: r.get()?,
            dummy_registration: r.bool()?,
            violation_mode: r.bool()?,
        })
    }
}

impl Encode for ErrEntry {
    fn encode(&self, w: &mut Writer) {
        w.str(&self.uid);
        for c in self.columns() {
            w.put(&c);
        }
    }
}

impl Decode for ErrEntry {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { uid: r.string()?, c_vid: r.get()?, c_block: r.get()?, c_ed: r.get()?, c_photo: r.get()? })
    }
}

impl Encode for CastInfo {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.c_photo);
        w.put(&self.c_rho_ev);
    }
}

impl Decode for CastInfo {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { c_photo: r.get()?, c_rho_ev: r.get()? })
    }
}

fn put_recipient(w: &mut Writer, r: Recipient) {
    let (tag, id) = match r {
        Recipient::RegistrationOfficer(i) => (1, i),
        Recipient::EligibilityOfficer(i) => (2, i),
        Recipient::PollingOfficer(i) => (3, i),
        Recipient::Auditor => (4, 0),
    };
    w.u8(tag);
    w.u32(id);
}

fn get_recipient(r: &mut Reader<'_>) -> Result<Recipient, DecodeError> {
    let tag = r.u8()?;
    let id = r.u32()?;
    Ok(match tag {
        1 => Recipient::RegistrationOfficer(id),
        2 => Recipient::EligibilityOfficer(id),
        3 => Recipient::PollingOfficer(id),
        4 if id == 0 => Recipient::Auditor,
        t => return Err(DecodeError::InvalidTag(t)),
    })
}

fn enum_code<T: PartialEq + Copy>(all: &[T], v: T) -> u8 {
    all.iter().position(|x| *x == v).expect("listed variant") as u8
}

fn enum_from<T: Copy>(all: &[T], c: u8) -> Result<T, DecodeError> {
    all.get(c as usize).copied().ok_or(DecodeError::InvalidTag(c))
}

const PURPOSES: [Purpose; 5] = [
    Purpose::DuplicateCheck,
    Purpose::EligibilityCheck,
    Purpose::CastCheck,
    Purpose::RegistrationAudit,
    Purpose::RollAudit,
];
const COLUMNS: [Column; 4] = [Column::Photo, Column::Ed, Column::CastPhoto, Column::RhoEv];

impl Encode for AuthEntry {
    fn encode(&self, w: &mut Writer) {
        put_recipient(w, self.recipient);
        w.u8(enum_code(&PURPOSES, self.purpose));
        w.u8(enum_code(&Section::ALL, self.section));
        w.u32(self.row);
        w.u8(enum_code(&COLUMNS, self.column));
        w.put(&self.element);
    }
}

impl Decode for AuthEntry {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            recipient: get_recipient(r)?,
            purpose: enum_from(&PURPOSES, r.u8()?)?,
            section: enum_from(&Section::ALL, r.u8()?)?,
            row: r.u32()?,
            column: enum_from(&COLUMNS, r.u8()?)?,
            element: r.get()?,
        })
    }
}

impl Encode for Record {
    fn encode(&self, w: &mut Writer) {
        w.u8(self.tag());
        match self {
            Record::Header(h) => w.put(h),
            Record::Phase(m) => {
                w.u8(m.phase.code());
                w.raw(&m.digest);
            }
            Record::Err(e) => w.put(e),
            Record::ShuffleStep(s) => w.put(s),
            Record::Roll(row) => {
                w.u64(row.vid);
                w.u32(row.block);
                w.put(&row.c_ed);
                w.put(&row.c_photo);
            }
            Record::RollDecryption(d) => {
                w.u32(d.row);
                w.seq(&d.vid);
                w.seq(&d.block);
            }
            Record::Eligibility(e) => {
                w.u32(e.row);
                w.bool(e.resp);
                w.u32(e.booth);
            }
            Record::CastInfo(c) => {
                w.u32(c.row);
                w.put(&c.info);
            }
            Record::Vote(v) => {
                w.u32(v.row);
                w.put(&v.ev);
            }
            Record::Auth(a) => w.put(a),
        }
    }
}

impl Decode for Record {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(match r.u8()? {
            1 => Record::Header(r.get()?),
            2 => Record::Phase(PhaseMarker { phase: BoardPhase::from_code(r.u8()?)?, digest: r.array()? }),
            3 => Record::Err(r.get()?),
            4 => Record::ShuffleStep(r.get()?),
            5 => Record::Roll(ErRow { vid: r.u64()?, block: r.u32()?, c_ed: r.get()?, c_photo: r.get()? }),
            6 => Record::RollDecryption(RollDecryption { row: r.u32()?, vid: r.seq()?, block: r.seq()? }),
            7 => Record::Eligibility(Eligibility { row: r.u32()?, resp: r.bool()?, booth: r.u32()? }),
            8 => Record::CastInfo(CastInfoRecord { row: r.u32()?, info: r.get()? }),
            9 => Record::Vote(VoteRecord { row: r.u32()?, ev: r.get()? }),
            10 => Record::Auth(r.get()?),
            t => return Err(DecodeError::InvalidTag(t)),
        })
    }
}
