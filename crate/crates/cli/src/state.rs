//! Run configuration and the private files kept beside the board.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use eroll_core::protocol::{Election, ElectionConfig, Presentation, VoterCard};
use eroll_core::rng::Seed;
use eroll_core::world::{CapturePolicy, Fixture, FixtureSpec, SubjectId, Violation, World};

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Master seed; every actor's randomness derives from it.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub kappa: usize,
    #[arg(long, default_value_t = 20)]
    pub alpha: u32,
    #[arg(long, default_value_t = 200)]
    pub honest_eligible: usize,
    #[arg(long, default_value_t = 0)]
    pub honest_ineligible: usize,
    #[arg(long, default_value_t = 0)]
    pub dishonest_eligible: usize,
    #[arg(long, default_value_t = 0)]
    pub dishonest_ineligible: usize,
    /// Citizens holding no uid; they present a made-up one.
    #[arg(long, default_value_t = 0)]
    pub without_uid: usize,
    #[arg(long, default_value_t = 1)]
    pub blocks: u32,
    #[arg(long, default_value_t = 1)]
    pub booths_per_block: u32,
    #[arg(long, default_value_t = 1)]
    pub registration_officers: u32,
    /// Vids are drawn from 0..10^digits.
    #[arg(long, default_value_t = 10)]
    pub vid_digits: u32,
    /// Add dummy rows for enrolled uids that did not register.
    #[arg(long)]
    pub dummy_registration: bool,
    /// Pairs of citizens the face oracle cannot tell apart.
    #[arg(long, default_value_t = 0)]
    pub twins: usize,
    /// Share of registered voters who turn out to cast.
    #[arg(long, default_value_t = 1.0)]
    pub turnout: f64,
    /// Share of voters who hand their receipts to an auditor.
    #[arg(long, default_value_t = 1.0)]
    pub receipt_audit_rate: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let with_uid = self.honest_eligible + self.honest_ineligible + self.dishonest_eligible + self.dishonest_ineligible;
        if with_uid + self.without_uid == 0 {
            bail!("the run has no citizens");
        }
        if self.alpha as usize > with_uid {
            bail!("α = {} exceeds the {with_uid} citizens who can register", self.alpha);
        }
        if 2 * self.twins > with_uid + self.without_uid {
            bail!("{} twin pairs need {} citizens", self.twins, 2 * self.twins);
        }
        for (name, v) in [("turnout", self.turnout), ("receipt audit rate", self.receipt_audit_rate)] {
            if !(0.0..=1.0).contains(&v) {
                bail!("{name} {v} is not in [0, 1]");
            }
        }
        self.election().validate()?;
        Ok(())
    }

    pub fn master(&self) -> Seed {
        Seed::from_u64(self.seed)
    }

    pub fn fixture(&self) -> Fixture {
        let spec = FixtureSpec {
            honest_eligible: self.honest_eligible,
            honest_ineligible: self.honest_ineligible,
            dishonest_eligible: self.dishonest_eligible,
            dishonest_ineligible: self.dishonest_ineligible,
            without_uid: self.without_uid,
            blocks: self.blocks,
            shared_uid_pairs: 0,
        };
        Fixture::generate(self.master().derive("fixture"), spec)
    }

    pub fn world(&self, fixture: &Fixture) -> World {
        let violation = if self.twins == 0 {
            Violation::None
        } else {
            Violation::Twins((0..self.twins as SubjectId).map(|k| (2 * k, 2 * k + 1)).collect())
        };
        World::from_fixture(fixture, CapturePolicy::Strict, violation)
    }

    pub fn election(&self) -> ElectionConfig {
        let mut c = ElectionConfig::new(self.master().derive("election"));
        c.kappa = self.kappa;
        c.alpha = self.alpha;
        c.vid_digits = self.vid_digits;
        c.blocks = self.blocks;
        c.booths_per_block = self.booths_per_block;
        c.registration_officers = self.registration_officers;
        c.dummy_registration = self.dummy_registration;
        c
    }
}

/// What the CLI keeps in `board/private` besides the election's own state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Private {
    pub config: RunConfig,
    pub cards: Vec<VoterCard>,
    pub cast_done: bool,
}

fn private_file(dir: &Path) -> PathBuf {
    dir.join("private").join("cli.json")
}

pub struct Opened {
    pub election: Election,
    pub fixture: Fixture,
    pub private: Private,
}

impl Opened {
    pub fn create(dir: &Path, config: RunConfig) -> Result<Self> {
        config.validate()?;
        if dir.join("private").exists() {
            bail!("{} already holds an election; expected an empty board directory", dir.display());
        }
        let fixture = config.fixture();
        let election = Election::setup(config.election(), config.world(&fixture))?;
        let cards = fixture
            .citizens
            .iter()
            .map(|c| {
                let uid = match fixture.voters[c.subject as usize].uid {
                    Some(_) => c.uid.clone(),
                    None => format!("X{:010}", c.subject),
                };
                VoterCard::new(c.subject, Presentation { uid, ed: c.ed.clone(), block: c.block })
            })
            .collect();
        Ok(Self { election, fixture, private: Private { config, cards, cast_done: false } })
    }

    pub fn open(dir: &Path) -> Result<Self> {
        let path = private_file(dir);
        let json = fs::read_to_string(&path)
            .with_context(|| format!("no election at {}; expected state: set up (run `setup` first)", dir.display()))?;
        let private: Private = serde_json::from_str(&json).with_context(|| format!("reading {}", path.display()))?;
        let fixture = private.config.fixture();
        let election = Election::load(dir, private.config.world(&fixture))?;
        Ok(Self { election, fixture, private })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        self.election.save(dir)?;
        let path = private_file(dir);
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_string(&self.private)?)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Uids of every citizen the registry knows, for dummy registration.
    pub fn enrolled(&self) -> Vec<String> {
        self.fixture.voters.iter().filter_map(|v| v.uid.clone()).collect()
    }
}
