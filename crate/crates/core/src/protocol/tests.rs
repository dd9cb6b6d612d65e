use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;

use super::*;
use crate::board::{self, BoardPhase, Payload, Section};
use crate::crypto::{threshold_decrypt, verify_eq, Element};
use crate::encoding::{Decode, Encode};
use crate::rng::Seed;
use crate::world::{CapturePolicy, Citizen, Fixture, FixtureSpec, Violation};

fn election_with(spec: FixtureSpec, tweak: impl FnOnce(&mut ElectionConfig)) -> (Fixture, Election) {
    let fixture = Fixture::generate(Seed::from_u64(7), spec);
    let world = World::from_fixture(&fixture, CapturePolicy::Strict, Violation::None);
    let mut config = ElectionConfig::new(Seed::from_u64(11));
    config.blocks = fixture.spec.blocks;
    tweak(&mut config);
    (fixture, Election::setup(config, world).unwrap())
}

fn honest(n: usize) -> (Fixture, Election) {
    election_with(FixtureSpec::honest(n, 1), |_| {})
}

fn card(c: &Citizen) -> VoterCard {
    VoterCard::new(c.subject, Presentation { uid: c.uid.clone(), ed: c.ed.clone(), block: c.block })
}

fn open(e: &Election, c: &crate::crypto::Ciphertext) -> Element {
    let mut rng = ProtocolRng::seed_from_u64(0);
    threshold_decrypt(&e.backend.pk, c, e.keys(), &mut rng).unwrap().0
}

#[test]
fn eligible_voter_is_accepted() {
    let (f, mut e) = honest(1);
    let mut v = card(&f.citizens[0]);
    let out = e.register_card(1, &mut v).unwrap();
    assert_eq!(out.receipt.kind(), "accept");
    assert!(out.rvalid);
    assert_eq!(e.board.err().len(), 1);
    assert!(v.vid.unwrap() < 10_000_000_000);
}

#[test]
fn second_registration_is_dup_reg() {
    let (f, mut e) = honest(1);
    let mut v = card(&f.citizens[0]);
    e.register_card(1, &mut v).unwrap();
    let out = e.register_card(1, &mut v).unwrap();
    let RegReceipt::DupReg { pre, prior } = &out.receipt else { panic!("{:?}", out.receipt.kind()) };
    assert!(e.world.matches(pre, prior));
    assert!(out.rvalid);
    assert_eq!(e.board.err().len(), 1);
    // The duplicate check shows up in the authorization log.
    assert_eq!(e.board.auth_log().len(), 1);
}

#[test]
fn someone_elses_uid_is_rejected() {
    let (f, mut e) = honest(2);
    let mut v = card(&f.citizens[0]);
    v.presented.uid = f.citizens[1].uid.clone();
    let out = e.register_card(1, &mut v).unwrap();
    assert!(matches!(out.receipt, RegReceipt::Reject { .. }));
    assert!(out.rvalid);
    assert!(e.board.err().is_empty());
}

#[test]
fn setup_is_deterministic_and_checked() {
    let (_, a) = honest(1);
    let (_, b) = honest(1);
    let header = |e: &Election| e.board.section_records(Section::Header).next().unwrap().to_vec();
    assert_eq!(header(&a), header(&b));
    assert_eq!(a.board.digest(), b.board.digest());

    let f = Fixture::generate(Seed::from_u64(7), FixtureSpec::honest(1, 1));
    let w = || World::from_fixture(&f, CapturePolicy::Strict, Violation::None);
    let mut cfg = ElectionConfig::new(Seed::from_u64(1));
    cfg.kappa = 0;
    assert!(matches!(Election::setup(cfg, w()), Err(ProtocolError::Config(_))));
    let reused = Election::setup_on(a.board.clone(), ElectionConfig::new(Seed::from_u64(1)), w());
    assert!(matches!(reused, Err(ProtocolError::Board(_))));
}

#[test]
fn accept_receipt_quadrants() {
    let (f, mut e) = honest(1);
    let mut v = card(&f.citizens[0]);
    e.register_card(1, &mut v).unwrap();
    let r = v.accept_receipt().unwrap().clone();
    let eq = AcceptReceipt::joined_eq_proof(&r.q12, &r.q22).unwrap();
    let pairs = [(r.q12.c_vid, r.q22.cs_vid), (r.q12.c_block, r.q22.cs_block), (r.q12.c_ed, r.q22.cs_ed)];
    assert!(verify_eq(&e.backend.pk, &pairs, &eq));
    assert_eq!(r.q12.rho_eq1.len(), r.q22.rho_eq2.len());
    assert_eq!(Q11::from_bytes(&r.q11.to_bytes()).unwrap(), r.q11);
    assert_eq!(Q12::from_bytes(&r.q12.to_bytes()).unwrap(), r.q12);
    assert_eq!(Q21::from_bytes(&r.q21.to_bytes()).unwrap(), r.q21);
    assert_eq!(Q22::from_bytes(&r.q22.to_bytes()).unwrap(), r.q22);
    assert!(r.size_without_photo() <= 2048, "{}", r.size_without_photo());
    assert_eq!(e.board.err()[0].columns(), [r.q12.c_vid, r.q12.c_block, r.q12.c_ed, r.q12.c_photo]);
}

#[test]
fn honest_roll_is_a_bijection_of_registrations() {
    let (f, mut e) = honest(10);
    for c in &f.citizens {
        assert!(e.register_card(1, &mut card(c)).unwrap().rvalid);
    }
    e.close_registration(&[]).unwrap();
    let summary = e.prepare_roll().unwrap();
    assert_eq!((summary.rows, summary.eligible), (10, 10));
    assert!(e.board.er().iter().all(|r| r.resp == Some(true) && r.booth == Some(1)));

    let mut before = BTreeMap::new();
    for row in e.board.err() {
        let t = [open(&e, &row.c_vid), open(&e, &row.c_block), open(&e, &row.c_ed), open(&e, &row.c_photo)];
        *before.entry(t).or_insert(0) += 1;
    }
    let mut after = BTreeMap::new();
    for row in e.board.er() {
        let t = [
            Payload::Vid(row.vid).element(),
            Payload::Block(row.block).element(),
            open(&e, &row.c_ed),
            open(&e, &row.c_photo),
        ];
        *after.entry(t).or_insert(0) += 1;
    }
    assert_eq!(before, after);
    assert!(before.values().all(|&k| k == 1));
}

#[test]
fn ineligible_registrant_gets_resp_zero() {
    let mut spec = FixtureSpec::honest(4, 1);
    spec.honest_ineligible = 1;
    let (f, mut e) = election_with(spec, |_| {});
    for c in &f.citizens {
        e.register_card(1, &mut card(c)).unwrap();
    }
    e.close_registration(&[]).unwrap();
    assert_eq!(e.prepare_roll().unwrap().eligible, 4);
    assert_eq!(e.board.er().iter().filter(|r| r.resp == Some(false)).count(), 1);
}

#[test]
fn eligibility_officers_see_only_their_block() {
    let (f, mut e) = election_with(FixtureSpec::honest(12, 3), |c| c.booths_per_block = 2);
    for c in &f.citizens {
        e.register_card(1, &mut card(c)).unwrap();
    }
    e.close_registration(&[]).unwrap();
    e.prepare_roll().unwrap();
    let er = e.board.er();
    let mut grants = 0;
    for a in e.board.auth_log() {
        if let board::Recipient::EligibilityOfficer(j) = a.recipient {
            assert_eq!(er[a.row as usize].block, j);
            grants += 1;
        }
    }
    assert_eq!(grants, 2 * er.len());
    for r in er {
        assert!(e.board.header().unwrap().booths_of(r.block).contains(&r.booth.unwrap()));
    }
    // Booths are filled round-robin within each block.
    for block in 1..=3 {
        let booths: Vec<u32> = er.iter().filter(|r| r.block == block).map(|r| r.booth.unwrap()).collect();
        let first = e.board.header().unwrap().booths_of(block).start().to_owned();
        for (i, b) in booths.iter().enumerate() {
            assert_eq!(*b, first + (i as u32 % 2));
        }
    }
    // Outside roll preparation the policy refuses the EO.
    let row = (0..er.len()).find(|&i| er[i].block == 1).unwrap();
    let req = DecryptRequest {
        recipient: board::Recipient::EligibilityOfficer(1),
        purpose: board::Purpose::EligibilityCheck,
        section: Section::Er,
        row,
        column: board::Column::Photo,
    };
    assert!(matches!(backend::authorize(&e.board, &req), Err(ProtocolError::Unauthorized(_))));
}

fn through_roll(e: &mut Election, f: &Fixture, n: usize) -> Vec<VoterCard> {
    let mut cards: Vec<VoterCard> = f.citizens.iter().take(n).map(card).collect();
    for c in &mut cards {
        e.register_card(1, c).unwrap();
    }
    e.close_registration(&[]).unwrap();
    e.prepare_roll().unwrap();
    cards
}

#[test]
fn cast_branches() {
    let mut spec = FixtureSpec::honest(3, 1);
    spec.honest_ineligible = 1;
    let (f, mut e) = election_with(spec, |_| {});
    let mut cards = through_roll(&mut e, &f, 4);

    let out = e.cast_card(&mut cards[0]).unwrap();
    assert_eq!(out.receipt.kind(), "accept");
    assert!(out.cvalid);
    let row = e.board.find_vid(cards[0].vid.unwrap()).unwrap();
    assert_eq!(e.board.er()[row].ev, cards[0].ev);

    let again = e.cast_card(&mut cards[0]).unwrap();
    let CastReceipt::DupCast { pre, photo } = &again.receipt else { panic!("{}", again.receipt.kind()) };
    assert!(e.world.matches(pre, photo));
    assert!(again.cvalid);

    let vote = e.fresh_vote();
    let unknown = (0..).find(|v| e.board.find_vid(*v).is_none()).unwrap();
    let out = e.cast(cards[1].subject, unknown, vote.clone(), None).unwrap();
    assert_eq!(out.receipt, CastReceipt::Reject { vid: unknown });
    assert!(out.cvalid);

    let out = e.cast(cards[1].subject, cards[2].vid.unwrap(), vote, None).unwrap();
    assert_eq!(out.receipt.kind(), "reject-wrong-vid");
    assert!(out.cvalid);

    let out = e.cast_card(&mut cards[3]).unwrap();
    let CastReceipt::RejectIneligible { ed, .. } = &out.receipt else { panic!("{}", out.receipt.kind()) };
    assert_eq!(*ed, f.citizens[3].ed);
    assert!(out.cvalid);
}

#[test]
fn polling_officer_is_confined_to_their_booth() {
    let (f, mut e) = election_with(FixtureSpec::honest(6, 1), |c| c.booths_per_block = 2);
    let cards = through_roll(&mut e, &f, 6);
    let vid = cards[0].vid.unwrap();
    let other = 3 - e.booth_of(vid).unwrap();
    let vote = e.fresh_vote();
    assert!(matches!(e.cast(cards[0].subject, vid, vote, Some(other)), Err(ProtocolError::Config(_))));
    let row = e.board.find_vid(vid).unwrap();
    let req = DecryptRequest {
        recipient: board::Recipient::PollingOfficer(other),
        purpose: board::Purpose::CastCheck,
        section: Section::Er,
        row,
        column: board::Column::Photo,
    };
    assert!(matches!(backend::authorize(&e.board, &req), Err(ProtocolError::Unauthorized(_))));
}

#[test]
fn absentees_get_dummy_fills() {
    let (f, mut e) = honest(5);
    let mut cards = through_roll(&mut e, &f, 5);
    for c in cards.iter_mut().take(3) {
        e.cast_card(c).unwrap();
    }
    assert_eq!(e.close_polls().unwrap(), 2);
    assert_eq!(e.board.phase(), Some(BoardPhase::Closed));
    let er = e.board.er();
    assert!(er.iter().all(|r| r.ci.is_some() && r.ev.is_some()));
    // Real and dummy rows have the same byte profile on every section.
    for section in [Section::Ci, Section::Ev] {
        let lens: Vec<usize> = e.board.section_records(section).map(<[u8]>::len).collect();
        assert_eq!(lens.len(), 5);
        assert!(lens.windows(2).all(|w| w[0] == w[1]), "{section:?} {lens:?}");
    }
}

#[test]
fn no_absentees_means_no_fills() {
    let (f, mut e) = honest(2);
    let mut cards = through_roll(&mut e, &f, 2);
    for c in &mut cards {
        e.cast_card(c).unwrap();
    }
    let before = e.board.section_records(Section::Ci).count();
    assert_eq!(e.close_polls().unwrap(), 0);
    assert_eq!(e.board.section_records(Section::Ci).count(), before);
}

#[test]
fn honest_run_completes_for_every_voter() {
    let (f, mut e) = election_with(FixtureSpec::honest(20, 2), |c| c.booths_per_block = 2);
    let mut cards = through_roll(&mut e, &f, 20);
    for c in &mut cards {
        e.cast_card(c).unwrap();
    }
    e.close_polls().unwrap();
    for c in &cards {
        assert_eq!((c.rvalid, c.cvalid), (Some(true), Some(true)));
        let row = e.board.find_vid(c.vid.unwrap()).unwrap();
        assert_eq!(e.board.er()[row].ev, c.ev);
    }
}

#[test]
fn dummy_registration_covers_absent_uids() {
    let (f, mut e) = election_with(FixtureSpec::honest(5, 2), |c| c.dummy_registration = true);
    for c in f.citizens.iter().take(3) {
        e.register_card(1, &mut card(c)).unwrap();
    }
    let enrolled: Vec<String> = f.citizens.iter().map(|c| c.uid.clone()).collect();
    assert_eq!(e.close_registration(&enrolled).unwrap(), 2);
    assert_eq!(e.board.err().len(), 5);
    let summary = e.prepare_roll().unwrap();
    assert_eq!(summary.eligible, 3);
}

#[test]
fn save_and_load_resume_the_election() {
    let dir = std::env::temp_dir().join(format!("eroll-protocol-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let (f, mut e) = honest(4);
    let mut cards: Vec<VoterCard> = f.citizens.iter().map(card).collect();
    for c in cards.iter_mut().take(2) {
        e.register_card(1, c).unwrap();
    }
    e.save(&dir).unwrap();
    let world = World::from_fixture(&f, CapturePolicy::Strict, Violation::None);
    let mut loaded = Election::load(&dir, world).unwrap();
    assert_eq!(loaded.board.digest(), e.board.digest());
    for c in cards.iter_mut().skip(2) {
        let a = e.register_card(1, &mut c.clone()).unwrap();
        let b = loaded.register_card(1, c).unwrap();
        assert_eq!(a.receipt, b.receipt);
    }
    assert_eq!(loaded.board.digest(), e.board.digest());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn stub_votes_from_the_election_verify() {
    let (_, mut e) = honest(1);
    let v = e.fresh_vote();
    assert!(stub::stub_valid(e.stub.public_key(), &v.rho_ev, &v.ev));
    assert_eq!(StubVote { ev: v.ev, rho_ev: v.rho_ev.clone() }, v);
}

#[derive(Clone, Debug)]
enum Act {
    Register { who: usize, uid_of: usize, ro: u32 },
    Cast { who: usize, vid_of: usize },
    CastUnknown { who: usize, vid: u64 },
}

fn act() -> impl Strategy<Value = Act> {
    prop_oneof![
        (0..5usize, 0..5usize, 1..=2u32).prop_map(|(who, uid_of, ro)| Act::Register { who, uid_of, ro }),
        (0..5usize, 0..5usize).prop_map(|(who, vid_of)| Act::Cast { who, vid_of }),
        (0..5usize, 0..100u64).prop_map(|(who, vid)| Act::CastUnknown { who, vid }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    // Every session with honest officers ends in exactly one receipt, which
    // the voter accepts.
    #[test]
    fn every_session_takes_one_branch(acts in prop::collection::vec(act(), 1..10)) {
        let mut spec = FixtureSpec::honest(3, 1);
        spec.honest_ineligible = 1;
        spec.without_uid = 1;
        let (f, mut e) = election_with(spec, |c| { c.kappa = 1; c.vid_digits = 2; c.registration_officers = 2; });
        let mut cards: Vec<VoterCard> = f.citizens.iter().map(card).collect();
        let (reg, cast): (Vec<Act>, Vec<Act>) = acts.into_iter().partition(|a| matches!(a, Act::Register { .. }));
        for a in reg {
            let Act::Register { who, uid_of, ro } = a else { unreachable!() };
            let mut c = cards[who].clone();
            c.presented.uid = f.citizens[uid_of].uid.clone();
            let out = e.register_card(ro, &mut c).unwrap();
            prop_assert!(out.rvalid);
            if out.receipt.accept().is_some() {
                cards[who].vid = c.vid;
            }
        }
        if e.board.err().is_empty() {
            return Ok(());
        }
        e.close_registration(&[]).unwrap();
        e.prepare_roll().unwrap();
        for a in cast {
            let (who, vid) = match a {
                Act::Cast { who, vid_of } => match cards[vid_of].vid { Some(v) => (who, v), None => continue },
                Act::CastUnknown { who, vid } => (who, vid),
                Act::Register { .. } => unreachable!(),
            };
            let vote = e.fresh_vote();
            let out = e.cast(cards[who].subject, vid, vote, None).unwrap();
            prop_assert!(out.cvalid, "{}", out.receipt.kind());
        }
        e.close_polls().unwrap();
    }
}
