//! The append-only board: validation, running digest and section files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use sha2::{Digest as _, Sha512};
use thiserror::Error;

use super::records::*;
use super::sampler::{select_h_alpha, Sample};
use crate::encoding::{Decode, DecodeError, Encode};
use crate::shuffle::ShuffleStep;

pub type Digest = [u8; 64];

const DIGEST_TAG: &[u8] = b"eroll/board/v1";

#[derive(Debug, Error)]
pub enum BoardError {
    #[error("board already has a header")]
    HeaderExists,
    #[error("board has no header")]
    NoHeader,
    #[error("phase error: expected {expected}, board is in {found}")]
    Phase { expected: String, found: String },
    #[error("append-only violation: {section:?} row {row} slot {slot} already set")]
    SlotSet { section: Section, row: u32, slot: &'static str },
    #[error("{section:?} has no row {row}")]
    NoRow { section: Section, row: u32 },
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("record {seq}: {source}")]
    Decode { seq: usize, source: DecodeError },
    #[error("digest mismatch at record {0}")]
    DigestMismatch(usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone)]
struct LogEntry {
    section: Section,
    bytes: Vec<u8>,
    digest: Digest,
}

/// In-memory board with materialized section views.
#[derive(Clone)]
pub struct Board {
    log: Vec<LogEntry>,
    digest: Digest,
    header: Option<BoardHeader>,
    phase: Option<BoardPhase>,
    markers: BTreeMap<BoardPhase, Digest>,
    err: Vec<ErrEntry>,
    steps: Vec<ShuffleStep>,
    er: Vec<ErEntry>,
    decryptions: Vec<Option<RollDecryption>>,
    auth: Vec<AuthEntry>,
}

impl std::fmt::Debug for Board {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Board")
            .field("records", &self.log.len())
            .field("phase", &self.phase)
            .field("err", &self.err.len())
            .field("er", &self.er.len())
            .field("auth", &self.auth.len())
            .finish()
    }
}

fn chain(prev: &Digest, bytes: &[u8]) -> Digest {
    let mut h = Sha512::new();
    h.update(DIGEST_TAG);
    h.update(prev);
    h.update((bytes.len() as u32).to_be_bytes());
    h.update(bytes);
    h.finalize().into()
}

fn phase_error(expected: impl ToString, found: Option<BoardPhase>) -> BoardError {
    BoardError::Phase {
        expected: expected.to_string(),
        found: found.map_or("setup".to_string(), |p| p.to_string()),
    }
}

impl Default for Board {
    fn default() -> Self {
        Self {
            log: vec![],
            digest: [0; 64],
            header: None,
            phase: None,
            markers: BTreeMap::new(),
            err: vec![],
            steps: vec![],
            er: vec![],
            decryptions: vec![],
            auth: vec![],
        }
    }
}

impl Board {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn digest(&self) -> &Digest {
        &self.digest
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }

    pub fn header(&self) -> Result<&BoardHeader, BoardError> {
        self.header.as_ref().ok_or(BoardError::NoHeader)
    }

    pub fn phase(&self) -> Option<BoardPhase> {
        self.phase
    }

    /// Board digest at the moment `phase` was entered.
    pub fn marker(&self, phase: BoardPhase) -> Option<&Digest> {
        self.markers.get(&phase)
    }

    pub fn err(&self) -> &[ErrEntry] {
        &self.err
    }

    pub fn er(&self) -> &[ErEntry] {
        &self.er
    }

    pub fn shuffle_steps(&self) -> &[ShuffleStep] {
        &self.steps
    }

    pub fn roll_decryption(&self, row: usize) -> Option<&RollDecryption> {
        self.decryptions.get(row).and_then(Option::as_ref)
    }

    pub fn auth_log(&self) -> &[AuthEntry] {
        &self.auth
    }

    pub fn find_vid(&self, vid: u64) -> Option<usize> {
        self.er.iter().position(|e| e.vid == vid)
    }

    /// Raw canonical bytes of each record in `section`, in append order.
    pub fn section_records(&self, section: Section) -> impl Iterator<Item = &[u8]> {
        self.log.iter().filter(move |e| e.section == section).map(|e| e.bytes.as_slice())
    }

    pub fn expect_phase(&self, phase: BoardPhase) -> Result<(), BoardError> {
        if self.phase == Some(phase) {
            Ok(())
        } else {
            Err(phase_error(phase, self.phase))
        }
    }

    fn check(&self, record: &Record) -> Result<(), BoardError> {
        let row_of = |section, row: u32, len: usize| {
            if (row as usize) < len {
                Ok(row as usize)
            } else {
                Err(BoardError::NoRow { section, row })
            }
        };
        if self.header.is_none() && !matches!(record, Record::Header(_)) {
            return Err(BoardError::NoHeader);
        }
        match record {
            Record::Header(_) => {
                if !self.log.is_empty() {
                    return Err(BoardError::HeaderExists);
                }
            }
            Record::Phase(m) => {
                let next = self.phase.and_then(BoardPhase::next);
                if next != Some(m.phase) {
                    return Err(BoardError::Phase {
                        expected: next.map_or("none".into(), |p| p.to_string()),
                        found: m.phase.to_string(),
                    });
                }
                if m.digest != self.digest {
                    return Err(BoardError::Malformed("phase marker digest is not the current digest".into()));
                }
            }
            Record::Err(_) => self.expect_phase(BoardPhase::Registration)?,
            Record::ShuffleStep(s) => {
                self.expect_phase(BoardPhase::RollPreparation)?;
                if s.server as usize != self.steps.len() + 1 {
                    return Err(BoardError::Malformed(format!("shuffle step from server {} out of order", s.server)));
                }
            }
            Record::Roll(_) => self.expect_phase(BoardPhase::RollPreparation)?,
            Record::RollDecryption(d) => {
                self.expect_phase(BoardPhase::RollPreparation)?;
                let i = row_of(Section::Er, d.row, self.er.len())?;
                if self.decryptions[i].is_some() {
                    return Err(BoardError::SlotSet { section: Section::RollProof, row: d.row, slot: "decryption" });
                }
            }
            Record::Eligibility(e) => {
                self.expect_phase(BoardPhase::RollPreparation)?;
                let i = row_of(Section::Er, e.row, self.er.len())?;
                if self.er[i].resp.is_some() {
                    return Err(BoardError::SlotSet { section: Section::Er, row: e.row, slot: "resp" });
                }
            }
            Record::CastInfo(c) => {
                self.expect_phase(BoardPhase::Casting)?;
                let i = row_of(Section::Er, c.row, self.er.len())?;
                if self.er[i].ci.is_some() {
                    return Err(BoardError::SlotSet { section: Section::Ci, row: c.row, slot: "ci" });
                }
            }
            Record::Vote(v) => {
                self.expect_phase(BoardPhase::Casting)?;
                let i = row_of(Section::Er, v.row, self.er.len())?;
                if self.er[i].ev.is_some() {
                    return Err(BoardError::SlotSet { section: Section::Ev, row: v.row, slot: "ev" });
                }
            }
            Record::Auth(a) => {
                let len = match a.section {
                    Section::Err => self.err.len(),
                    Section::Er | Section::Ci => self.er.len(),
                    s => return Err(BoardError::Malformed(format!("authorization for section {s:?}"))),
                };
                row_of(a.section, a.row, len)?;
            }
        }
        Ok(())
    }

    fn apply(&mut self, record: Record) {
        match record {
            Record::Header(h) => {
                self.header = Some(h);
                self.phase = Some(BoardPhase::Registration);
                self.markers.insert(BoardPhase::Registration, self.digest);
            }
            Record::Phase(m) => {
                self.phase = Some(m.phase);
                self.markers.insert(m.phase, m.digest);
            }
            Record::Err(e) => self.err.push(e),
            Record::ShuffleStep(s) => self.steps.push(s),
            Record::Roll(r) => {
                self.er.push(r.into());
                self.decryptions.push(None);
            }
            Record::RollDecryption(d) => {
                let i = d.row as usize;
                self.decryptions[i] = Some(d);
            }
            Record::Eligibility(e) => {
                let row = &mut self.er[e.row as usize];
                row.resp = Some(e.resp);
                row.booth = Some(e.booth);
            }
            Record::CastInfo(c) => self.er[c.row as usize].ci = Some(c.info),
            Record::Vote(v) => self.er[v.row as usize].ev = Some(v.ev),
            Record::Auth(a) => self.auth.push(a),
        }
    }

    /// Validates and appends one record; returns its sequence number.
    pub fn append(&mut self, record: Record) -> Result<usize, BoardError> {
        self.check(&record)?;
        let section = record.section();
        let bytes = record.to_bytes();
        self.digest = chain(&self.digest, &bytes);
        self.log.push(LogEntry { section, bytes, digest: self.digest });
        self.apply(record);
        Ok(self.log.len() - 1)
    }

    /// Appends a marker entering `phase`.
    pub fn enter(&mut self, phase: BoardPhase) -> Result<usize, BoardError> {
        self.append(Record::Phase(PhaseMarker { phase, digest: self.digest }))
    }

    /// H_α over ERR rows, seeded by the digest at registration close.
    pub fn sample_err(&self) -> Result<Sample, BoardError> {
        let seed = self.marker(BoardPhase::RollPreparation).ok_or_else(|| phase_error("roll-preparation", self.phase))?;
        let alpha = self.header()?.alpha as usize;
        let candidates: Vec<usize> = (0..self.err.len()).collect();
        Ok(select_h_alpha(seed, Section::Err.tag(), alpha, &candidates, "all"))
    }

    /// H_α over roll rows with resp = 1, seeded by the digest at polls close.
    pub fn sample_er(&self) -> Result<Sample, BoardError> {
        let seed = self.marker(BoardPhase::Closed).ok_or_else(|| phase_error("closed", self.phase))?;
        let alpha = self.header()?.alpha as usize;
        let candidates: Vec<usize> = (0..self.er.len()).filter(|&i| self.er[i].resp == Some(true)).collect();
        Ok(select_h_alpha(seed, Section::Er.tag(), alpha, &candidates, "resp=1"))
    }

    /// Writes one `<seq> <hex>` line plus a `digest <hex>` line per record
    /// into each section file of `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), BoardError> {
        fs::create_dir_all(dir)?;
        for section in Section::ALL {
            let tmp = dir.join(format!("{}.tmp", section.file_name()));
            let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
            for (seq, e) in self.log.iter().enumerate().filter(|(_, e)| e.section == section) {
                writeln!(f, "{seq} {}", hex::encode(&e.bytes))?;
                writeln!(f, "digest {}", hex::encode(e.digest))?;
            }
            f.into_inner().map_err(|e| e.into_error())?.sync_all()?;
            fs::rename(&tmp, dir.join(section.file_name()))?;
        }
        Ok(())
    }

    /// Replays the section files of `dir`, re-validating every record and
    /// every digest line.
    pub fn load(dir: &Path) -> Result<Self, BoardError> {
        let mut entries: BTreeMap<usize, (Vec<u8>, Digest)> = BTreeMap::new();
        for section in Section::ALL {
            let path = dir.join(section.file_name());
            if !path.exists() {
                continue;
            }
            let text = fs::read_to_string(&path)?;
            let mut lines = text.lines();
            while let Some(line) = lines.next() {
                let bad = || BoardError::Malformed(format!("{}: bad line {line:?}", section.file_name()));
                let (seq, hexed) = line.split_once(' ').ok_or_else(bad)?;
                let seq: usize = seq.parse().map_err(|_| bad())?;
                let bytes = hex::decode(hexed).map_err(|_| bad())?;
                let digest_line = lines.next().ok_or_else(bad)?;
                let d = digest_line.strip_prefix("digest ").ok_or_else(bad)?;
                let digest: Digest = hex::decode(d).ok().and_then(|v| v.try_into().ok()).ok_or_else(bad)?;
                if entries.insert(seq, (bytes, digest)).is_some() {
                    return Err(BoardError::Malformed(format!("duplicate sequence number {seq}")));
                }
            }
        }
        let mut board = Board::new();
        for (expected, (seq, (bytes, digest))) in entries.into_iter().enumerate() {
            if seq != expected {
                return Err(BoardError::Malformed(format!("missing record {expected}")));
            }
            let record = Record::from_bytes(&bytes).map_err(|source| BoardError::Decode { seq, source })?;
            board.append(record)?;
            if board.digest != digest {
                return Err(BoardError::DigestMismatch(seq));
            }
        }
        Ok(board)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{encrypt, keygen, Ciphertext, Element, Scalar};
    use crate::rng::Seed;

    pub(crate) fn header(alpha: u32) -> BoardHeader {
        let seeds: Vec<Seed> = (0..3).map(|i| Seed::from_u64(100 + i)).collect();
        let (pk, _) = keygen(&seeds).unwrap();
        BoardHeader {
            format: BOARD_FORMAT,
            election: "test".into(),
            pk,
            alpha,
            vid_digits: 10,
            blocks: 1,
            booths_per_block: 1,
            envs: vec!["env_r".into()],
            generator_seed: "g".into(),
            stub_pk: Element::generator(),
            dummy_registration: false,
            violation_mode: false,
        }
    }

    fn ct(k: u64) -> Ciphertext {
        let (pk, _) = keygen(&[Seed::from_u64(1)]).unwrap();
        encrypt(&pk, &Element::generator(), &Scalar::from(k + 1))
    }

    fn err_entry(k: u64) -> ErrEntry {
        ErrEntry { uid: format!("U{k:010}"), c_vid: ct(k), c_block: ct(k + 1), c_ed: ct(k + 2), c_photo: ct(k + 3) }
    }

    fn roll_board(rows: u64) -> Board {
        let mut b = Board::new();
        b.append(Record::Header(header(2))).unwrap();
        for k in 0..rows {
            b.append(Record::Err(err_entry(k))).unwrap();
        }
        b.enter(BoardPhase::RollPreparation).unwrap();
        for k in 0..rows {
            b.append(Record::Roll(ErRow { vid: k, block: 1, c_ed: ct(k), c_photo: ct(k) })).unwrap();
        }
        b
    }

    #[test]
    fn append_then_read_back() {
        let mut b = Board::new();
        b.append(Record::Header(header(2))).unwrap();
        let e = err_entry(7);
        let seq = b.append(Record::Err(e.clone())).unwrap();
        assert_eq!(seq, 1);
        assert_eq!(b.err()[0], e);
        assert_eq!(b.section_records(Section::Err).next().unwrap(), Record::Err(e).to_bytes().as_slice());
    }

    #[test]
    fn resp_slot_is_set_once() {
        let mut b = roll_board(2);
        b.append(Record::Eligibility(Eligibility { row: 0, resp: true, booth: 1 })).unwrap();
        let again = b.append(Record::Eligibility(Eligibility { row: 0, resp: false, booth: 1 }));
        assert!(matches!(again, Err(BoardError::SlotSet { slot: "resp", .. })));
        assert_eq!(b.er()[0].resp, Some(true));
    }

    #[test]
    fn cast_slots_are_set_once_and_only_while_casting() {
        let mut b = roll_board(1);
        let info = CastInfo { c_photo: ct(1), c_rho_ev: ct(2) };
        assert!(matches!(
            b.append(Record::CastInfo(CastInfoRecord { row: 0, info })),
            Err(BoardError::Phase { .. })
        ));
        b.enter(BoardPhase::Casting).unwrap();
        b.append(Record::CastInfo(CastInfoRecord { row: 0, info })).unwrap();
        assert!(b.append(Record::CastInfo(CastInfoRecord { row: 0, info })).is_err());
        b.append(Record::Vote(VoteRecord { row: 0, ev: ct(3) })).unwrap();
        assert!(matches!(
            b.append(Record::Vote(VoteRecord { row: 0, ev: ct(4) })),
            Err(BoardError::SlotSet { section: Section::Ev, .. })
        ));
        assert!(matches!(b.append(Record::Vote(VoteRecord { row: 5, ev: ct(4) })), Err(BoardError::NoRow { .. })));
    }

    #[test]
    fn digest_depends_on_order() {
        let (a, c) = (err_entry(1), err_entry(2));
        let mut x = Board::new();
        x.append(Record::Header(header(2))).unwrap();
        let mut y = Board::new();
        y.append(Record::Header(header(2))).unwrap();
        x.append(Record::Err(a.clone())).unwrap();
        x.append(Record::Err(c.clone())).unwrap();
        y.append(Record::Err(c)).unwrap();
        y.append(Record::Err(a)).unwrap();
        assert_ne!(x.digest(), y.digest());
        // Independent recomputation of the chain.
        let mut d = [0u8; 64];
        for bytes in x.log.iter().map(|e| &e.bytes) {
            let mut h = Sha512::new();
            h.update(b"eroll/board/v1");
            h.update(d);
            h.update((bytes.len() as u32).to_be_bytes());
            h.update(bytes);
            d = h.finalize().into();
        }
        assert_eq!(&d, x.digest());
    }

    #[test]
    fn phase_order_is_enforced() {
        let mut b = Board::new();
        assert!(matches!(b.append(Record::Err(err_entry(0))), Err(BoardError::NoHeader)));
        b.append(Record::Header(header(2))).unwrap();
        assert!(matches!(b.append(Record::Header(header(2))), Err(BoardError::HeaderExists)));
        assert!(b.enter(BoardPhase::Casting).is_err());
        b.enter(BoardPhase::RollPreparation).unwrap();
        assert!(matches!(b.append(Record::Err(err_entry(0))), Err(BoardError::Phase { .. })));
        let stale = PhaseMarker { phase: BoardPhase::Casting, digest: [0; 64] };
        assert!(b.append(Record::Phase(stale)).is_err());
    }

    #[test]
    fn save_and_load_replays_identically() {
        let mut b = roll_board(3);
        b.append(Record::Eligibility(Eligibility { row: 1, resp: true, booth: 1 })).unwrap();
        let dir = std::env::temp_dir().join(format!("eroll-board-{}", std::process::id()));
        b.save(&dir).unwrap();
        let c = Board::load(&dir).unwrap();
        assert_eq!(c.digest(), b.digest());
        assert_eq!(c.er(), b.er());
        assert_eq!(c.err(), b.err());

        // Tampering with any record is caught by the digest lines.
        let path = dir.join(Section::Err.file_name());
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let last = lines[0].pop().unwrap();
        lines[0].push(if last == '0' { '1' } else { '0' });
        fs::write(&path, lines.join("\n")).unwrap();
        assert!(Board::load(&dir).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn samples_are_pinned_to_phase_markers() {
        let mut b = roll_board(5);
        let s1 = b.sample_err().unwrap();
        b.append(Record::Eligibility(Eligibility { row: 0, resp: true, booth: 1 })).unwrap();
        assert_eq!(b.sample_err().unwrap(), s1);
        assert_eq!(s1.indices.len(), 2);
        assert!(b.sample_er().is_err());
    }
}
