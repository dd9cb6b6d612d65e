use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::audit::{Check, QuadrantDisclosure};
use crate::board::{Board, Recipient, Section};
use crate::world::SubjectId;

/// What the audits revealed beyond the verdicts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub alpha: u32,
    pub err_rows: usize,
    pub err_decrypted: usize,
    /// Rows with resp = 1, the population the ER sample is drawn from.
    pub er_rows: usize,
    pub er_decrypted: usize,
    /// Fraction of rows whose contents an auditor saw.
    pub err_leakage: f64,
    pub er_leakage: f64,
    pub findings: Vec<Check>,
}

impl PrivacyReport {
    pub fn clean(&self) -> bool {
        self.findings.iter().all(|c| c.passed)
    }
}

fn distinct_rows(board: &Board, sections: &[Section]) -> BTreeSet<u32> {
    board
        .auth_log()
        .iter()
        .filter(|a| a.recipient == Recipient::Auditor && sections.contains(&a.section))
        .map(|a| a.row)
        .collect()
}

fn lengths(board: &Board, section: Section) -> BTreeSet<usize> {
    board.section_records(section).map(<[u8]>::len).collect()
}

/// Accounts for auditor decryptions on the board's authorization log and
/// for the receipt halves voters disclosed.
pub fn privacy_accounting(board: &Board, disclosures: &[(SubjectId, QuadrantDisclosure)]) -> PrivacyReport {
    let alpha = board.header().map_or(0, |h| h.alpha);
    let err_rows = board.err().len();
    let er_rows = board.er().iter().filter(|r| r.resp == Some(true)).count();
    let err_decrypted = distinct_rows(board, &[Section::Err]).len();
    let er_decrypted = distinct_rows(board, &[Section::Er, Section::Ci]).len();
    let mut findings = vec![];
    let mut check = |name: &str, passed: bool, detail: String| {
        findings.push(Check { name: name.into(), passed, detail });
    };
    check(
        "privacy.err-decryptions",
        err_decrypted <= alpha as usize,
        format!("{err_decrypted} of {err_rows} ERR rows decrypted for the auditor, α = {alpha}"),
    );
    check(
        "privacy.er-decryptions",
        er_decrypted <= alpha as usize,
        format!("{er_decrypted} of {er_rows} resp=1 rows decrypted for the auditor, α = {alpha}"),
    );

    let mut halves: BTreeMap<SubjectId, BTreeSet<u8>> = BTreeMap::new();
    for (s, d) in disclosures {
        halves.entry(*s).or_default().insert(d.beta());
    }
    let paired: Vec<SubjectId> =
        halves.iter().filter(|(_, b)| b.contains(&0) && b.contains(&1)).map(|(s, _)| *s).collect();
    check(
        "privacy.quadrant-pairing",
        paired.is_empty(),
        format!("voters who disclosed both their uid and their vid halves: {paired:?}"),
    );

    let ci = lengths(board, Section::Ci);
    let ev = lengths(board, Section::Ev);
    check(
        "privacy.dummy-profile",
        ci.len() <= 1 && ev.len() <= 1,
        format!("casting-information record lengths {ci:?}, vote record lengths {ev:?}"),
    );

    let share = |k: usize, n: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    PrivacyReport {
        alpha,
        err_rows,
        err_decrypted,
        er_rows,
        er_decrypted,
        err_leakage: share(err_decrypted, err_rows),
        er_leakage: share(er_decrypted, er_rows),
        findings,
    }
}
