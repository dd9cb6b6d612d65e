//! One function per subcommand. Each returns a machine-readable report and
//! whether every verdict it produced is 1.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Result};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use eroll_core::audit::{ind_cast_audit, ind_reg_audit, univ_audit, RegDisclosure};
use eroll_core::board::BoardPhase;
use eroll_core::harness::privacy_accounting;
use eroll_core::protocol::CastReceipt;

use crate::state::{Opened, RunConfig};

pub struct Report {
    pub value: Value,
    pub ok: bool,
}

impl Report {
    fn ok(value: Value) -> Self {
        Self { value, ok: true }
    }
}

fn counts<'a>(kinds: impl Iterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let mut m = BTreeMap::new();
    for k in kinds {
        *m.entry(k).or_default() += 1;
    }
    m
}

pub fn setup(dir: &Path, config: RunConfig) -> Result<Report> {
    let o = Opened::create(dir, config)?;
    o.save(dir)?;
    Ok(Report::ok(json!({
        "phase": "registration",
        "citizens": o.private.cards.len(),
        "kappa": o.election.config.kappa,
        "alpha": o.election.config.alpha,
        "digest": hex::encode(o.election.board.digest()),
    })))
}

/// Every citizen visits a registration desk, then registration closes.
pub fn register_phase(dir: &Path) -> Result<Report> {
    let mut o = Opened::open(dir)?;
    o.election.board.expect_phase(BoardPhase::Registration)?;
    if o.private.cards.iter().any(|c| c.reg_receipt.is_some()) {
        bail!("registration already ran; expected state: registration with no visits");
    }
    let ros = o.election.config.registration_officers;
    let mut unhappy = 0;
    for (i, card) in o.private.cards.iter_mut().enumerate() {
        let out = o.election.register_card(i as u32 % ros + 1, card)?;
        unhappy += usize::from(!out.rvalid);
    }
    let enrolled = if o.election.config.dummy_registration { o.enrolled() } else { vec![] };
    let dummies = o.election.close_registration(&enrolled)?;
    o.save(dir)?;
    let kinds = counts(o.private.cards.iter().filter_map(|c| c.reg_receipt.as_ref()).map(|r| r.kind()));
    Ok(Report {
        value: json!({
            "phase": "roll-preparation",
            "receipts": kinds,
            "err_rows": o.election.board.err().len(),
            "dummy_rows": dummies,
            "receipts_failing_the_voters_check": unhappy,
            "digest": hex::encode(o.election.board.digest()),
        }),
        ok: unhappy == 0,
    })
}

pub fn prepare_roll(dir: &Path) -> Result<Report> {
    let mut o = Opened::open(dir)?;
    let s = o.election.prepare_roll()?;
    o.save(dir)?;
    Ok(Report::ok(json!({
        "phase": "casting",
        "rows": s.rows,
        "eligible": s.eligible,
        "seconds": { "shuffle": s.shuffle.as_secs_f64(), "decrypt": s.decrypt.as_secs_f64(), "review": s.review.as_secs_f64() },
        "digest": hex::encode(o.election.board.digest()),
    })))
}

/// Voters holding a vid turn out with the configured probability.
pub fn cast_phase(dir: &Path) -> Result<Report> {
    let mut o = Opened::open(dir)?;
    o.election.board.expect_phase(BoardPhase::Casting)?;
    if o.private.cast_done {
        bail!("casting already ran; expected state: casting with no votes taken");
    }
    let mut rng = o.private.config.master().derive("turnout").rng();
    let turnout = o.private.config.turnout;
    let mut unhappy = 0;
    for card in o.private.cards.iter_mut() {
        if card.vid.is_none() || !rng.gen_bool(turnout) {
            continue;
        }
        let out = o.election.cast_card(card)?;
        unhappy += usize::from(!out.cvalid);
    }
    o.private.cast_done = true;
    o.save(dir)?;
    let kinds = counts(o.private.cards.iter().filter_map(|c| c.cast_receipt.as_ref()).map(|r| r.kind()));
    Ok(Report {
        value: json!({
            "phase": "casting",
            "receipts": kinds,
            "receipts_failing_the_voters_check": unhappy,
            "digest": hex::encode(o.election.board.digest()),
        }),
        ok: unhappy == 0,
    })
}

pub fn close(dir: &Path) -> Result<Report> {
    let mut o = Opened::open(dir)?;
    let filled = o.election.close_polls()?;
    o.save(dir)?;
    Ok(Report::ok(json!({ "phase": "closed", "dummy_fills": filled, "digest": hex::encode(o.election.board.digest()) })))
}

fn write_report(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let reports = dir.join("reports");
    fs::create_dir_all(&reports)?;
    fs::write(reports.join(format!("{name}.json")), serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn univ(dir: &Path) -> Result<Report> {
    let mut o = Opened::open(dir)?;
    let e = &mut o.election;
    let u = univ_audit(&mut e.board, &mut e.backend, &e.world)?;
    let privacy = privacy_accounting(&e.board, &[]);
    // Auditor decryptions are logged on the board.
    o.save(dir)?;
    write_report(dir, "univ-audit", &u)?;
    write_report(dir, "privacy", &privacy)?;
    let checks: Vec<Value> = u
        .verdict
        .checks
        .iter()
        .map(|c| json!({ "check": c.name, "passed": c.passed, "detail": c.detail }))
        .collect();
    Ok(Report {
        value: json!({
            "verdict": u.verdict.verdict,
            "checks": checks,
            "err_sample": u.err_sample.indices,
            "er_sample": u.er_sample.indices,
            "privacy_clean": privacy.clean(),
        }),
        ok: u.verdict.verdict,
    })
}

/// Voters audit their receipts with the configured probability, each
/// disclosing one randomly chosen pair of quadrants.
pub fn receipt_audit(dir: &Path) -> Result<Report> {
    let o = Opened::open(dir)?;
    let e = &o.election;
    if e.board.phase() == Some(BoardPhase::Registration) {
        bail!("no receipts to audit yet; expected state: roll-preparation or later (run `register-phase` first)");
    }
    let rate = o.private.config.receipt_audit_rate;
    let mut rows = vec![];
    for card in &o.private.cards {
        // Fixed per voter, so a repeated audit discloses the same quadrants.
        let mut rng = o.private.config.master().derive_index("receipt-audit", card.subject as u64).rng();
        let (audit_reg, beta, audit_cast) = (rng.gen_bool(rate), rng.gen_range(0..3), rng.gen_bool(rate));
        if let Some(r) = card.reg_receipt.as_ref().filter(|_| audit_reg) {
            let v = ind_reg_audit(&e.board, &e.world, &RegDisclosure::from_receipt(r, beta));
            rows.push(json!({ "subject": card.subject, "receipt": r.kind(), "beta": beta, "verdict": v.verdict, "failed": v.failed() }));
        }
        if let Some(r) = card.cast_receipt.as_ref().filter(|_| audit_cast) {
            let halves = match r {
                CastReceipt::RejectWrongVid { .. } => card.accept_receipt().map(|a| (&a.q11, &a.q21)),
                _ => None,
            };
            let v = ind_cast_audit(&e.board, &e.world, r, halves);
            rows.push(json!({ "subject": card.subject, "receipt": r.kind(), "verdict": v.verdict, "failed": v.failed() }));
        }
    }
    let ok = rows.iter().all(|r| r["verdict"] == json!(true));
    let value = json!({ "audited": rows.len(), "verdict": ok, "audits": rows });
    write_report(dir, "receipt-audit", &value)?;
    Ok(Report { value, ok })
}

/// Every phase in order, auditing receipts after registration and after
/// casting.
pub fn run_all(dir: &Path, config: RunConfig) -> Result<Report> {
    let mut stages = serde_json::Map::new();
    let mut ok = true;
    let steps: [(&str, &dyn Fn() -> Result<Report>); 8] = [
        ("setup", &|| setup(dir, config.clone())),
        ("register-phase", &|| register_phase(dir)),
        ("receipt-audit-registration", &|| receipt_audit(dir)),
        ("prepare-roll", &|| prepare_roll(dir)),
        ("cast-phase", &|| cast_phase(dir)),
        ("close", &|| close(dir)),
        ("receipt-audit", &|| receipt_audit(dir)),
        ("univ-audit", &|| univ(dir)),
    ];
    for (name, step) in steps {
        let r = step()?;
        ok &= r.ok;
        stages.insert(name.to_string(), r.value);
    }
    let o = Opened::open(dir)?;
    stages.insert("digest".into(), json!(hex::encode(o.election.board.digest())));
    Ok(Report { value: Value::Object(stages), ok })
}
