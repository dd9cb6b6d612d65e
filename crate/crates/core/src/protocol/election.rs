//! One election: board, backend, officers and the simulated world, with
//! drivers for each phase.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::backend::{Backend, HonestServer, MixServer};
use super::cast::{close_polls, Ballot, Booth, HonestPollingOfficer, PollingOfficer};
use super::receipts::{CastReceipt, RegReceipt};
use super::register::{register_dummies, Desk, HonestRegistrationOfficer, RegistrationOfficer};
use super::roll::{prepare_roll, EligibilityOfficer, HonestEligibilityOfficer, RollSummary};
use super::stub::{StubAuthority, StubVote};
use super::voter::{cvalid, rvalid, VoterCard};
use super::{Presentation, ProtocolError, ProtocolRng, Session};
use crate::board::{Board, BoardError, BoardHeader, BoardPhase, PayloadRegistry, Record, BOARD_FORMAT};
use crate::crypto::{keygen, KeyShare};
use crate::rng::Seed;
use crate::shuffle::{CommitmentKey, DEFAULT_GENERATOR_SEED};
use crate::world::{Env, Phase, PhotoToken, SubjectId, World};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectionConfig {
    pub label: String,
    pub seed: Seed,
    pub kappa: usize,
    pub alpha: u32,
    pub vid_digits: u32,
    pub blocks: u32,
    pub booths_per_block: u32,
    pub registration_officers: u32,
    pub candidates: u32,
    pub dummy_registration: bool,
    pub generator_seed: String,
}

impl ElectionConfig {
    pub fn new(seed: Seed) -> Self {
        Self {
            label: "eroll".into(),
            seed,
            kappa: 3,
            alpha: 20,
            vid_digits: 10,
            blocks: 1,
            booths_per_block: 1,
            registration_officers: 1,
            candidates: 3,
            dummy_registration: false,
            generator_seed: DEFAULT_GENERATOR_SEED.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: &str| Err(ProtocolError::Config(m.into()));
        if self.kappa == 0 {
            return bad("κ must be at least 1");
        }
        if self.blocks == 0 || self.booths_per_block == 0 || self.registration_officers == 0 {
            return bad("blocks, booths per block and registration officers must be at least 1");
        }
        if !(1..=18).contains(&self.vid_digits) {
            return bad("vid digits must be between 1 and 18");
        }
        Ok(())
    }
}

/// The officers of an election, by role. Index i holds RO i+1, the EO of
/// block i+1 and the PO of booth i+1.
pub struct Officers {
    pub ro: Vec<Box<dyn RegistrationOfficer>>,
    pub eo: Vec<Box<dyn EligibilityOfficer>>,
    pub po: Vec<Box<dyn PollingOfficer>>,
}

impl Officers {
    pub fn honest(config: &ElectionConfig) -> Self {
        Self {
            ro: (0..config.registration_officers).map(|_| Box::new(HonestRegistrationOfficer) as _).collect(),
            eo: (0..config.blocks).map(|_| Box::new(HonestEligibilityOfficer) as _).collect(),
            po: (0..config.blocks * config.booths_per_block).map(|_| Box::new(HonestPollingOfficer) as _).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegOutcome {
    pub receipt: RegReceipt,
    pub seen: Vec<PhotoToken>,
    pub rvalid: bool,
}

#[derive(Clone, Debug)]
pub struct CastOutcome {
    pub receipt: CastReceipt,
    pub seen: Vec<PhotoToken>,
    pub cvalid: bool,
}

/// Private state kept next to the board by whoever runs the simulation.
#[derive(Serialize, Deserialize)]
struct PrivateState {
    config: ElectionConfig,
    registry: PayloadRegistry,
    vids: BTreeSet<u64>,
    sessions: u64,
    world_issued: u64,
}

pub struct Election {
    pub config: ElectionConfig,
    pub board: Board,
    pub backend: Backend,
    pub world: World,
    pub stub: StubAuthority,
    pub officers: Officers,
    /// Vids issued so far.
    pub vids: BTreeSet<u64>,
    keys: Vec<KeyShare>,
    sessions: u64,
}

impl std::fmt::Debug for Election {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Election").field("config", &self.config).field("board", &self.board.len()).finish()
    }
}

/// Honest servers keyed from the election seed, plus their key shares.
fn backend(config: &ElectionConfig, registry: PayloadRegistry) -> Result<(Backend, Vec<KeyShare>), ProtocolError> {
    let seeds: Vec<Seed> = (1..=config.kappa as u64).map(|k| config.seed.derive_index("server", k)).collect();
    let (pk, keys) = keygen(&seeds)?;
    let backend = Backend {
        pk,
        ck: CommitmentKey::derive(&config.generator_seed, 0),
        servers: keys.iter().map(|k| Box::new(HonestServer::new(k.clone())) as Box<dyn MixServer>).collect(),
        registry,
    };
    Ok((backend, keys))
}

impl Election {
    /// Key generation and the board header on a fresh board.
    pub fn setup(config: ElectionConfig, world: World) -> Result<Self, ProtocolError> {
        Self::setup_on(Board::new(), config, world)
    }

    /// As [`Election::setup`], on a given board, which must be empty.
    pub fn setup_on(mut board: Board, config: ElectionConfig, world: World) -> Result<Self, ProtocolError> {
        config.validate()?;
        if !board.is_empty() {
            return Err(BoardError::HeaderExists.into());
        }
        let (backend, keys) = backend(&config, PayloadRegistry::new())?;
        let stub = StubAuthority::new(&config.seed, config.candidates);
        board.append(Record::Header(BoardHeader {
            format: BOARD_FORMAT,
            election: config.label.clone(),
            pk: backend.pk.clone(),
            alpha: config.alpha,
            vid_digits: config.vid_digits,
            blocks: config.blocks,
            booths_per_block: config.booths_per_block,
            envs: Env::ALL.iter().map(|e| e.name().to_string()).collect(),
            generator_seed: config.generator_seed.clone(),
            stub_pk: *stub.public_key(),
            dummy_registration: config.dummy_registration,
            violation_mode: world.violations_active(),
        }))?;
        let officers = Officers::honest(&config);
        Ok(Self { config, board, backend, world, stub, officers, vids: BTreeSet::new(), keys, sessions: 0 })
    }

    /// Server key shares, for test-only escrow and for adversaries that
    /// model colluding servers.
    pub fn keys(&self) -> &[KeyShare] {
        &self.keys
    }

    /// A fresh randomness stream for the next session.
    pub fn next_rng(&mut self, label: &str) -> ProtocolRng {
        self.sessions += 1;
        self.config.seed.derive_index(label, self.sessions).rng()
    }

    /// One voter at RO `ro` (1-based).
    pub fn register(&mut self, ro: u32, subject: SubjectId, claim: &Presentation) -> Result<RegOutcome, ProtocolError> {
        let mut rng = self.next_rng("register");
        let mut session = Session::new(subject, Phase::Registration);
        let officer = self
            .officers
            .ro
            .get_mut(ro as usize - 1)
            .ok_or_else(|| ProtocolError::Config(format!("no registration officer {ro}")))?;
        let mut desk = Desk {
            officer: ro,
            board: &mut self.board,
            backend: &mut self.backend,
            world: &self.world,
            session: Some(&mut session),
            vids: &mut self.vids,
            rng: &mut rng,
        };
        let receipt = officer.register(&mut desk, claim)?;
        let ok = rvalid(claim, &session.seen, &receipt);
        Ok(RegOutcome { receipt, seen: session.seen, rvalid: ok })
    }

    /// Registers the card's holder and records the outcome on the card.
    pub fn register_card(&mut self, ro: u32, card: &mut VoterCard) -> Result<RegOutcome, ProtocolError> {
        let out = self.register(ro, card.subject, &card.presented.clone())?;
        card.vid = out.receipt.accept().map(|a| a.q21.vid).or(card.vid);
        card.reg_receipt = Some(out.receipt.clone());
        card.rvalid = Some(out.rvalid);
        Ok(out)
    }

    /// Dummy rows (if configured), RO closing hooks, then the roll
    /// preparation marker. Returns the number of dummy rows.
    pub fn close_registration(&mut self, enrolled: &[String]) -> Result<usize, ProtocolError> {
        self.board.expect_phase(BoardPhase::Registration)?;
        let mut rng = self.next_rng("close-registration");
        let mut added = 0;
        for (i, officer) in self.officers.ro.iter_mut().enumerate() {
            let mut desk = Desk {
                officer: i as u32 + 1,
                board: &mut self.board,
                backend: &mut self.backend,
                world: &self.world,
                session: None,
                vids: &mut self.vids,
                rng: &mut rng,
            };
            if i == 0 && self.config.dummy_registration {
                added = register_dummies(&mut desk, enrolled)?;
            }
            officer.close(&mut desk)?;
        }
        self.board.enter(BoardPhase::RollPreparation)?;
        Ok(added)
    }

    /// Mixing, public decryption, EO review, then casting opens.
    pub fn prepare_roll(&mut self) -> Result<RollSummary, ProtocolError> {
        let mut rng = self.next_rng("prepare-roll");
        let summary = prepare_roll(&mut self.board, &mut self.backend, &self.world, &mut self.officers.eo, &mut rng)?;
        self.board.enter(BoardPhase::Casting)?;
        Ok(summary)
    }

    /// Booth a vid is assigned to, if it is on the roll.
    pub fn booth_of(&self, vid: u64) -> Option<u32> {
        self.board.find_vid(vid).and_then(|i| self.board.er()[i].booth)
    }

    /// A valid vote from the stand-in voting protocol.
    pub fn fresh_vote(&mut self) -> StubVote {
        let mut rng = self.next_rng("vote");
        self.stub.cast(&mut rng)
    }

    /// One voter casting `vote` under `vid` at `booth` (by default the booth
    /// the roll assigns, or booth 1 for unknown vids).
    pub fn cast(
        &mut self,
        subject: SubjectId,
        vid: u64,
        vote: StubVote,
        booth: Option<u32>,
    ) -> Result<CastOutcome, ProtocolError> {
        self.board.expect_phase(BoardPhase::Casting)?;
        let booth = booth.or_else(|| self.booth_of(vid)).unwrap_or(1);
        let mut rng = self.next_rng("cast");
        let mut session = Session::new(subject, Phase::Casting);
        let officer = self
            .officers
            .po
            .get_mut(booth as usize - 1)
            .ok_or_else(|| ProtocolError::Config(format!("no booth {booth}")))?;
        let ballot = Ballot { vid, vote };
        let mut b = Booth {
            booth,
            board: &mut self.board,
            backend: &mut self.backend,
            world: &self.world,
            stub: &self.stub,
            session: Some(&mut session),
            rng: &mut rng,
        };
        let receipt = officer.cast(&mut b, &ballot)?;
        let ok = cvalid(vid, &ballot.vote, &session.seen, &receipt);
        Ok(CastOutcome { receipt, seen: session.seen, cvalid: ok })
    }

    /// Casts a fresh vote for the card's holder under the card's vid.
    pub fn cast_card(&mut self, card: &mut VoterCard) -> Result<CastOutcome, ProtocolError> {
        let vid = card.vid.ok_or_else(|| ProtocolError::Config(format!("subject {} holds no vid", card.subject)))?;
        let vote = self.fresh_vote();
        card.ev = Some(vote.ev);
        let out = self.cast(card.subject, vid, vote, None)?;
        card.cast_receipt = Some(out.receipt.clone());
        card.cvalid = Some(out.cvalid);
        Ok(out)
    }

    /// Dummy fills at every booth; returns how many.
    pub fn close_polls(&mut self) -> Result<usize, ProtocolError> {
        let mut rng = self.next_rng("close-polls");
        close_polls(&mut self.board, &mut self.backend, &self.world, &self.stub, &mut self.officers.po, &mut rng)
    }

    /// Writes the board into `dir` and the private state into `dir/private`.
    pub fn save(&self, dir: &Path) -> Result<(), ProtocolError> {
        self.board.save(dir)?;
        let private = dir.join("private");
        fs::create_dir_all(&private).map_err(BoardError::from)?;
        let state = PrivateState {
            config: self.config.clone(),
            registry: self.backend.registry.clone(),
            vids: self.vids.clone(),
            sessions: self.sessions,
            world_issued: self.world.issued(),
        };
        let json = serde_json::to_string(&state).map_err(|e| ProtocolError::Config(e.to_string()))?;
        let tmp = private.join("state.json.tmp");
        fs::write(&tmp, json).map_err(BoardError::from)?;
        fs::rename(&tmp, private.join("state.json")).map_err(BoardError::from)?;
        Ok(())
    }

    /// Reloads an election saved by [`Election::save`] with honest officers.
    /// `world` must be rebuilt from the same fixture.
    pub fn load(dir: &Path, world: World) -> Result<Self, ProtocolError> {
        let board = Board::load(dir)?;
        let json = fs::read_to_string(dir.join("private").join("state.json")).map_err(BoardError::from)?;
        let state: PrivateState = serde_json::from_str(&json).map_err(|e| ProtocolError::Config(e.to_string()))?;
        let config = state.config;
        let mut registry = state.registry;
        registry.restore_grants(board.auth_log());
        let (mut backend, keys) = backend(&config, registry)?;
        if board.header()?.pk != backend.pk {
            return Err(ProtocolError::Config("private state does not belong to this board".into()));
        }
        backend.ck.ensure(board.err().len());
        world.resume(state.world_issued);
        let stub = StubAuthority::new(&config.seed, config.candidates);
        let officers = Officers::honest(&config);
        Ok(Self { config, board, backend, world, stub, officers, vids: state.vids, keys, sessions: state.sessions })
    }
}
