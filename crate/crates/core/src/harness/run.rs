use std::collections::BTreeSet;

use rand::Rng;

use super::adversary::*;
use super::privacy::privacy_accounting;
use super::{scenario, ScenarioId, TrialDepth, TrialOutcome, TrialParams};
use crate::audit::{err_audit, ind_cast_audit, ind_reg_audit, AuditVerdict, QuadrantDisclosure, RegDisclosure, UnivAudit};
use crate::protocol::{
    CastReceipt, Election, ElectionConfig, HonestServer, Presentation, ProtocolError, ProtocolRng, StubVote,
    VoterCard,
};
use crate::rng::Seed;
use crate::world::{CapturePolicy, Citizen, Fixture, FixtureSpec, SubjectId, Violation, World};

/// One election driven voter by voter, collecting every verdict.
pub struct Run {
    pub fixture: Fixture,
    pub election: Election,
    /// One card per citizen, in fixture order.
    pub cards: Vec<VoterCard>,
    pub reg_audits: Vec<AuditVerdict>,
    pub cast_audits: Vec<AuditVerdict>,
    pub disclosures: Vec<(SubjectId, QuadrantDisclosure)>,
    pub err_audit: Option<AuditVerdict>,
    pub univ: Option<UnivAudit>,
    pub alarms: Vec<String>,
    rng: ProtocolRng,
}

fn card(c: &Citizen) -> VoterCard {
    VoterCard::new(c.subject, Presentation { uid: c.uid.clone(), ed: c.ed.clone(), block: c.block })
}

impl Run {
    pub fn new(fixture: Fixture, config: ElectionConfig) -> Result<Self, ProtocolError> {
        let world = World::from_fixture(&fixture, CapturePolicy::Strict, Violation::None);
        let rng = config.seed.derive("voters").rng();
        let election = Election::setup(config, world)?;
        let cards = fixture.citizens.iter().map(card).collect();
        Ok(Self {
            fixture,
            election,
            cards,
            reg_audits: vec![],
            cast_audits: vec![],
            disclosures: vec![],
            err_audit: None,
            univ: None,
            alarms: vec![],
            rng,
        })
    }

    /// Records an honest party's alarm instead of aborting the run.
    fn alarm<T>(&mut self, r: Result<T, ProtocolError>) -> Result<Option<T>, ProtocolError> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(ProtocolError::Alarm(m)) => {
                self.alarms.push(m);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    pub fn register(&mut self, i: usize) -> Result<(), ProtocolError> {
        let ro = (i as u32 % self.election.config.registration_officers) + 1;
        let r = self.election.register_card(ro, &mut self.cards[i]);
        self.alarm(r)?;
        Ok(())
    }

    pub fn audit_registration(&mut self, i: usize, beta: u8) {
        let Some(r) = self.cards[i].reg_receipt.as_ref() else { return };
        let d = RegDisclosure::from_receipt(r, beta);
        if let RegDisclosure::Accept(q) = &d {
            self.disclosures.push((self.cards[i].subject, q.clone()));
        }
        self.reg_audits.push(ind_reg_audit(&self.election.board, &self.election.world, &d));
    }

    /// Each voter audits with probability `rate`, choosing β uniformly.
    pub fn audit_registrations(&mut self, rate: f64) {
        for i in 0..self.cards.len() {
            if self.cards[i].reg_receipt.is_some() && self.rng.gen_bool(rate) {
                let beta = self.rng.gen_range(0..3);
                self.audit_registration(i, beta);
            }
        }
    }

    pub fn close_registration(&mut self) -> Result<(), ProtocolError> {
        let r = self.election.close_registration(&[]);
        self.alarm(r)?;
        Ok(())
    }

    pub fn audit_err(&mut self) -> Result<(), ProtocolError> {
        let e = &mut self.election;
        self.err_audit = Some(err_audit(&mut e.board, &mut e.backend, &e.world)?);
        Ok(())
    }

    pub fn prepare_roll(&mut self) -> Result<(), ProtocolError> {
        let r = self.election.prepare_roll();
        self.alarm(r)?;
        Ok(())
    }

    /// Casts a fresh vote, or `vote` when given. Voters without a vid stay home.
    pub fn cast(&mut self, i: usize, vote: Option<StubVote>) -> Result<(), ProtocolError> {
        let Some(vid) = self.cards[i].vid else { return Ok(()) };
        let vote = vote.unwrap_or_else(|| self.election.fresh_vote());
        self.cards[i].ev = Some(vote.ev);
        let r = self.election.cast(self.cards[i].subject, vid, vote, None);
        if let Some(out) = self.alarm(r)? {
            self.cards[i].cast_receipt = Some(out.receipt);
            self.cards[i].cvalid = Some(out.cvalid);
        }
        Ok(())
    }

    pub fn audit_cast(&mut self, i: usize) {
        let c = &self.cards[i];
        let Some(r) = c.cast_receipt.as_ref() else { return };
        let halves = match r {
            CastReceipt::RejectWrongVid { .. } => c.accept_receipt().map(|a| (&a.q11, &a.q21)),
            _ => None,
        };
        self.cast_audits.push(ind_cast_audit(&self.election.board, &self.election.world, r, halves));
    }

    pub fn audit_casts(&mut self, rate: f64) {
        for i in 0..self.cards.len() {
            if self.cards[i].cast_receipt.is_some() && self.rng.gen_bool(rate) {
                self.audit_cast(i);
            }
        }
    }

    pub fn close_polls(&mut self) -> Result<(), ProtocolError> {
        let r = self.election.close_polls();
        self.alarm(r)?;
        Ok(())
    }

    pub fn audit_universal(&mut self) -> Result<(), ProtocolError> {
        let e = &mut self.election;
        self.univ = Some(crate::audit::univ_audit(&mut e.board, &mut e.backend, &e.world)?);
        Ok(())
    }

    /// Failed checks from every audit so far, plus voters' own receipt
    /// checks and honest parties' alarms.
    pub fn fired(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let verdicts = self.reg_audits.iter().chain(&self.cast_audits).chain(&self.err_audit);
        for v in verdicts.chain(self.univ.as_ref().map(|u| &u.verdict)) {
            out.extend(v.failed().into_iter().map(str::to_string));
        }
        if self.cards.iter().any(|c| c.rvalid == Some(false)) {
            out.insert("voter.registration-receipt".into());
        }
        if self.cards.iter().any(|c| c.cvalid == Some(false)) {
            out.insert("voter.cast-receipt".into());
        }
        if !self.alarms.is_empty() {
            out.insert("alarm".into());
        }
        out
    }
}

/// Where a scenario's detector lives, for [`TrialDepth::ThroughDetector`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Stage {
    Registration,
    Err,
    Full,
}

fn stage_of(detector: Option<&str>) -> Stage {
    match detector {
        Some(d) if d.starts_with("reg.") => Stage::Registration,
        Some(d) if d.starts_with("err.") => Stage::Err,
        _ => Stage::Full,
    }
}

/// One seeded trial of `id`.
pub(crate) fn trial(id: ScenarioId, p: &TrialParams, seed: Seed) -> Result<TrialOutcome, ProtocolError> {
    use ScenarioId as S;
    let f = p.frauds;
    let mut spec = FixtureSpec::honest(p.voters, p.blocks);
    match id {
        S::PhantomErr | S::AbsenteeStuffing => spec.dishonest_eligible = 1,
        S::DuplicateUid => spec.dishonest_eligible = f,
        S::IneligibleApproved => spec.dishonest_ineligible = f,
        _ => {}
    }
    let fixture = Fixture::generate(seed.derive("fixture"), spec);
    let mut config = ElectionConfig::new(seed.derive("election"));
    config.kappa = p.kappa;
    config.alpha = p.alpha;
    config.blocks = p.blocks;
    config.booths_per_block = p.booths_per_block;
    let mut run = Run::new(fixture, config)?;

    let honest: Vec<usize> = (0..p.voters).collect();
    let extra: Vec<usize> = (p.voters..run.cards.len()).collect();
    // The accomplice in these scenarios never registers.
    let accomplice = extra.first().map(|&i| run.cards[i].subject);
    let extra: Vec<usize> = if matches!(id, S::PhantomErr | S::AbsenteeStuffing) { vec![] } else { extra };
    let budget = Budget::new(f);
    let e = &mut run.election;
    let booths = (p.blocks * p.booths_per_block) as usize;
    match id {
        S::DuplicateUid => e.officers.ro[0] = Box::new(DuplicatingRo),
        S::PhantomErr => {
            let a = accomplice.expect("fixture has an accomplice");
            let ed = run.fixture.citizen(a).ed.clone();
            e.officers.ro[0] = Box::new(PhantomRo { budget, accomplice: a, ed });
        }
        S::WrongEncryption => e.officers.ro[0] = Box::new(WrongEdRo { budget }),
        S::DroppedRegistration => e.officers.ro[0] = Box::new(DroppingRo { budget }),
        S::FakeDupReg => e.officers.ro[0] = Box::new(DenyingRo { budget }),
        S::EoDenial => e.officers.eo.iter_mut().for_each(|o| *o = Box::new(DenyingEo { budget: budget.clone() })),
        S::IneligibleApproved => e.officers.eo.iter_mut().for_each(|o| *o = Box::new(ApprovingEo)),
        S::ShuffleTamper => {
            let key = e.keys()[0].clone();
            e.backend.servers[0] = Box::new(TamperingServer { inner: HonestServer::new(key) });
        }
        S::ShareForgery => {
            let keys = e.keys().to_vec();
            let (last, others) = keys.split_last().expect("at least one server");
            let k = e.backend.servers.len() - 1;
            e.backend.servers[k] = Box::new(ForgingServer::new(last.clone(), others.to_vec(), budget));
        }
        S::AbsenteeStuffing => {
            let a = accomplice.expect("fixture has an accomplice");
            e.officers.po.iter_mut().for_each(|o| *o = Box::new(StuffingPo { budget: budget.clone(), accomplice: a }));
        }
        S::FakeDupCast => e.officers.po.iter_mut().for_each(|o| *o = Box::new(DupCastPo { budget: budget.clone() })),
        S::EvSubstitution => {
            e.officers.po.iter_mut().for_each(|o| *o = Box::new(SubstitutingPo { budget: budget.clone() }))
        }
        S::SkippedFill => e.officers.po.iter_mut().for_each(|o| *o = Box::new(LazyPo)),
        S::Honest | S::EvClash | S::QuadrantLeak => {}
    }
    debug_assert_eq!(e.officers.po.len(), booths);

    let stop = match p.depth {
        TrialDepth::Full => Stage::Full,
        TrialDepth::ThroughDetector => stage_of(scenario(id).detector),
    };

    for &i in honest.iter().chain(&extra) {
        run.register(i)?;
        if id == S::DuplicateUid && extra.contains(&i) {
            run.register(i)?;
        }
    }
    if stop != Stage::Err {
        run.audit_registrations(p.audit_rate);
    }
    if id == S::QuadrantLeak {
        for &i in honest.iter().take(f) {
            run.audit_registration(i, 0);
            run.audit_registration(i, 1);
        }
    }
    if stop == Stage::Registration {
        return Ok(outcome(&run, false));
    }
    run.close_registration()?;
    if stop == Stage::Err {
        run.audit_err()?;
        return Ok(outcome(&run, false));
    }
    run.prepare_roll()?;

    // Absentees are the last honest voters.
    let stay_home = if matches!(id, S::AbsenteeStuffing | S::SkippedFill) { f } else { 0 };
    let voting = &honest[..honest.len().saturating_sub(stay_home)];
    let mut last: Option<StubVote> = None;
    for (k, &i) in voting.iter().chain(&extra).enumerate() {
        let reuse = if id == S::EvClash && k % 2 == 1 && k < 2 * f { last.take() } else { None };
        let vote = reuse.unwrap_or_else(|| run.election.fresh_vote());
        last = Some(vote.clone());
        run.cast(i, Some(vote))?;
    }
    run.audit_casts(p.audit_rate);
    run.close_polls()?;
    run.audit_universal()?;
    Ok(outcome(&run, true))
}

fn outcome(run: &Run, privacy: bool) -> TrialOutcome {
    let mut fired = run.fired();
    if privacy {
        let report = privacy_accounting(&run.election.board, &run.disclosures);
        fired.extend(report.findings.iter().filter(|c| !c.passed).map(|c| c.name.clone()));
    }
    TrialOutcome { fired: fired.into_iter().collect() }
}
