use std::collections::BTreeSet;

use super::*;

fn full_audit() -> TrialParams {
    TrialParams {
        voters: 8,
        frauds: 2,
        alpha: 100,
        kappa: 2,
        blocks: 2,
        booths_per_block: 2,
        audit_rate: 1.0,
        depth: TrialDepth::Full,
    }
}

#[test]
fn every_threat_is_exercised() {
    for (threat, ids) in traceability() {
        assert!(!ids.is_empty(), "{threat:?} has no scenario");
    }
    let names: BTreeSet<&str> = catalog().iter().map(|s| s.name).collect();
    assert_eq!(names.len(), ScenarioId::ALL.len());
    for id in ScenarioId::ALL {
        assert_eq!(ScenarioId::from_name(id.name()), Some(id));
        assert_eq!(scenario(id).id, id);
    }
}

#[test]
fn each_fraud_trips_its_own_detector_only() {
    for sc in catalog() {
        let expected: BTreeSet<String> = sc.detector.iter().map(|d| d.to_string()).collect();
        let mut caught = false;
        // Cut-and-choose frauds escape when every voter picks a harmless β.
        for t in 0..20 {
            let out = run::trial(sc.id, &full_audit(), Seed::from_u64(t)).unwrap();
            let fired: BTreeSet<String> = out.fired.iter().cloned().collect();
            assert!(fired.is_subset(&expected), "{}: fired {fired:?}", sc.name);
            if fired == expected {
                caught = true;
                break;
            }
            assert_eq!(sc.prediction, Prediction::CutAndChoose, "{} escaped a full audit", sc.name);
        }
        assert!(caught, "{} never detected", sc.name);
    }
}

#[test]
fn reports_replay_exactly() {
    let p = TrialParams { voters: 6, frauds: 1, alpha: 3, ..full_audit() };
    let a = run_scenario(ScenarioId::AbsenteeStuffing, &p, Seed::from_u64(9), 4).unwrap();
    let b = run_scenario(ScenarioId::AbsenteeStuffing, &p, Seed::from_u64(9), 4).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.trials, 4);
    assert!(a.stray.is_empty());
}

#[test]
fn honest_trials_never_detect() {
    let p = TrialParams { voters: 10, frauds: 0, alpha: 4, audit_rate: 0.5, ..full_audit() };
    let r = run_scenario(ScenarioId::Honest, &p, Seed::from_u64(1), 5).unwrap();
    assert_eq!((r.detections, r.predicted), (0, 0.0));
    assert!(r.pass, "{r:?}");
}

#[test]
fn stopping_at_the_detector_agrees_with_full_runs() {
    let full = TrialParams { voters: 12, frauds: 3, alpha: 4, ..full_audit() };
    let short = TrialParams { depth: TrialDepth::ThroughDetector, ..full.clone() };
    for id in [ScenarioId::PhantomErr, ScenarioId::DuplicateUid] {
        for t in 0..6 {
            let seed = Seed::from_u64(t);
            let a = run::trial(id, &full, seed).unwrap();
            let b = run::trial(id, &short, seed).unwrap();
            assert_eq!(a.detected(), b.detected(), "{id:?} trial {t}");
        }
    }
}

#[test]
fn inconsistent_parameters_are_refused() {
    let p = TrialParams { voters: 3, frauds: 2, ..full_audit() };
    assert!(run_scenario(ScenarioId::EvClash, &p, Seed::from_u64(0), 1).is_err());
    assert!(run_scenario(ScenarioId::Honest, &p, Seed::from_u64(0), 1).is_err());
    let p = TrialParams { audit_rate: 1.5, ..full_audit() };
    assert!(run_scenario(ScenarioId::FakeDupReg, &p, Seed::from_u64(0), 1).is_err());
}

#[test]
fn predictions_follow_the_parameters() {
    let p = TrialParams { voters: 90, frauds: 10, alpha: 20, audit_rate: 0.3, ..full_audit() };
    let h = crate::bounds::hyp(100, 20, 10, 1.0).unwrap();
    assert!((scenario(ScenarioId::PhantomErr).predicted(&p).unwrap() - (1.0 - h)).abs() < 1e-12);
    let within = crate::bounds::hyp(90, 20, 10, 1.0).unwrap();
    assert!((scenario(ScenarioId::AbsenteeStuffing).predicted(&p).unwrap() - (1.0 - within)).abs() < 1e-12);
    let one = TrialParams { frauds: 1, audit_rate: 1.0, ..p };
    assert!((scenario(ScenarioId::WrongEncryption).predicted(&one).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(scenario(ScenarioId::ShuffleTamper).predicted(&one).unwrap(), 1.0);
}

#[test]
fn honest_audits_stay_within_the_sample() {
    let fixture = crate::world::Fixture::generate(Seed::from_u64(4), crate::world::FixtureSpec::honest(25, 1));
    let mut config = crate::protocol::ElectionConfig::new(Seed::from_u64(4));
    config.alpha = 6;
    let mut run = Run::new(fixture, config).unwrap();
    for i in 0..25 {
        run.register(i).unwrap();
    }
    run.audit_registrations(1.0);
    run.close_registration().unwrap();
    run.prepare_roll().unwrap();
    for i in 0..20 {
        run.cast(i, None).unwrap();
    }
    run.close_polls().unwrap();
    run.audit_universal().unwrap();
    assert!(run.fired().is_empty(), "{:?}", run.fired());
    let r = privacy_accounting(&run.election.board, &run.disclosures);
    assert!(r.clean(), "{:?}", r.findings);
    assert_eq!((r.err_decrypted, r.er_decrypted), (6, 6));
    assert!(r.err_leakage <= 6.0 / 25.0 && r.er_leakage <= 6.0 / 25.0);
}
