//! Individual receipt audits and the universal audit.
//!
//! Every audit returns an [`AuditVerdict`]: the verdict bit plus the named
//! checks that produced it, the decryptions it caused and the oracle calls
//! it made (when the world is logging).

mod receipt;
mod universal;

pub use receipt::{ind_cast_audit, ind_reg_audit, QuadrantDisclosure, RegDisclosure};
pub use universal::{err_audit, univ_audit, UnivAudit};

use serde::{Deserialize, Serialize};

use crate::board::AuthEntry;
use crate::world::{OracleCall, World};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditVerdict {
    pub verdict: bool,
    pub checks: Vec<Check>,
    pub decryptions: Vec<AuthEntry>,
    pub oracle_calls: Vec<OracleCall>,
}

impl AuditVerdict {
    /// Names of the checks that failed.
    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    /// Conjunction over the checks whose name starts with `prefix`.
    pub fn stage(&self, prefix: &str) -> bool {
        self.checks.iter().filter(|c| c.name.starts_with(prefix)).all(|c| c.passed)
    }
}

/// Collects checks and the oracle calls made since it was created.
pub(crate) struct Trail<'w> {
    world: &'w World,
    calls_before: usize,
    checks: Vec<Check>,
    decryptions: Vec<AuthEntry>,
}

impl<'w> Trail<'w> {
    pub(crate) fn new(world: &'w World) -> Self {
        Self { world, calls_before: world.call_count(), checks: vec![], decryptions: vec![] }
    }

    pub(crate) fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) -> bool {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
        passed
    }

    pub(crate) fn decrypted(&mut self, grant: AuthEntry) {
        self.decryptions.push(grant);
    }

    pub(crate) fn finish(self) -> AuditVerdict {
        let calls = self.world.calls();
        let oracle_calls = calls.get(self.calls_before..).map(<[_]>::to_vec).unwrap_or_default();
        AuditVerdict {
            verdict: self.checks.iter().all(|c| c.passed),
            checks: self.checks,
            decryptions: self.decryptions,
            oracle_calls,
        }
    }
}
