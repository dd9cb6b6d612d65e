use serde::{Deserialize, Serialize};

use super::TrialParams;
use crate::bounds::hyp;
use crate::protocol::ProtocolError;

/// The fraud classes the protocol is meant to catch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Threat {
    DenialOfRegistration,
    DataEntryErrors,
    IneligibleOrFakeVoters,
    MultipleRegistrations,
    DeletionOfRegistered,
    DenialOfVoting,
    IneligibleVoting,
    DoubleVoting,
    AbsenteeInjection,
    VoterProfiling,
    ForcedAbstention,
}

impl Threat {
    pub const ALL: [Threat; 11] = [
        Threat::DenialOfRegistration,
        Threat::DataEntryErrors,
        Threat::IneligibleOrFakeVoters,
        Threat::MultipleRegistrations,
        Threat::DeletionOfRegistered,
        Threat::DenialOfVoting,
        Threat::IneligibleVoting,
        Threat::DoubleVoting,
        Threat::AbsenteeInjection,
        Threat::VoterProfiling,
        Threat::ForcedAbstention,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    RegistrationOfficer,
    EligibilityOfficer,
    PollingOfficer,
    Server,
    Voter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioId {
    Honest,
    DuplicateUid,
    PhantomErr,
    WrongEncryption,
    DroppedRegistration,
    FakeDupReg,
    EoDenial,
    ShuffleTamper,
    ShareForgery,
    IneligibleApproved,
    AbsenteeStuffing,
    FakeDupCast,
    EvSubstitution,
    EvClash,
    SkippedFill,
    QuadrantLeak,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 16] = [
        ScenarioId::Honest,
        ScenarioId::DuplicateUid,
        ScenarioId::PhantomErr,
        ScenarioId::WrongEncryption,
        ScenarioId::DroppedRegistration,
        ScenarioId::FakeDupReg,
        ScenarioId::EoDenial,
        ScenarioId::ShuffleTamper,
        ScenarioId::ShareForgery,
        ScenarioId::IneligibleApproved,
        ScenarioId::AbsenteeStuffing,
        ScenarioId::FakeDupCast,
        ScenarioId::EvSubstitution,
        ScenarioId::EvClash,
        ScenarioId::SkippedFill,
        ScenarioId::QuadrantLeak,
    ];

    pub fn name(self) -> &'static str {
        scenario(self).name
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// How the detection rate follows from the trial parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prediction {
    Never,
    Certain,
    /// Each planted instance is caught when its voter audits the receipt.
    ReceiptAudit,
    /// As above, but only one of the three disclosures exposes it.
    CutAndChoose,
    /// Caught when the ERR sample hits one of the planted rows.
    ErrSample,
    /// Caught when the ER sample hits one of the planted rows; the planted
    /// rows are added to the resp=1 population.
    ErSampleAdded,
    /// As above, with the planted rows inside the honest population.
    ErSampleWithin,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FraudScenario {
    pub id: ScenarioId,
    pub name: &'static str,
    pub summary: &'static str,
    pub corrupted: &'static [Role],
    pub threats: &'static [Threat],
    /// The check that must fail, and no other.
    pub detector: Option<&'static str>,
    pub prediction: Prediction,
}

impl FraudScenario {
    /// Rejects parameters the scenario cannot be planted under.
    pub fn validate(&self, p: &TrialParams) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::Config(format!("{}: {m}", self.name)));
        let needed = match self.id {
            ScenarioId::EvClash => 2 * p.frauds,
            ScenarioId::ShuffleTamper => 2,
            ScenarioId::Honest | ScenarioId::DuplicateUid | ScenarioId::PhantomErr | ScenarioId::IneligibleApproved => 0,
            _ => p.frauds,
        };
        if p.voters < needed {
            return bad(format!("needs at least {needed} honest voters, got {}", p.voters));
        }
        if self.id == ScenarioId::Honest && p.frauds != 0 {
            return bad("plants nothing; set frauds to 0".into());
        }
        if !(0.0..=1.0).contains(&p.audit_rate) {
            return bad(format!("audit rate {} is not a probability", p.audit_rate));
        }
        if p.kappa == 0 || p.blocks == 0 || p.booths_per_block == 0 {
            return bad("κ, blocks and booths per block must be positive".into());
        }
        Ok(())
    }

    pub fn predicted(&self, p: &TrialParams) -> Result<f64, ProtocolError> {
        let f = p.frauds as u64;
        let a = p.alpha as u64;
        let sampled = |n: u64| -> Result<f64, ProtocolError> {
            hyp(n, a.min(n), f.min(n), 1.0).map(|h| 1.0 - h).map_err(|e| ProtocolError::Config(e.to_string()))
        };
        let per_receipt = |q: f64| 1.0 - (1.0 - q).powi(p.frauds as i32);
        Ok(match self.prediction {
            Prediction::Never => 0.0,
            Prediction::Certain => f64::from(u8::from(f > 0)),
            Prediction::ReceiptAudit => per_receipt(p.audit_rate),
            Prediction::CutAndChoose => per_receipt(p.audit_rate / 3.0),
            Prediction::ErrSample | Prediction::ErSampleAdded => sampled(p.voters as u64 + f)?,
            Prediction::ErSampleWithin => sampled(p.voters as u64)?,
        })
    }
}

use Prediction as P;
use Role::*;
use Threat as T;

const CATALOG: [FraudScenario; 16] = [
    FraudScenario {
        id: ScenarioId::Honest,
        name: "honest",
        summary: "every actor follows the protocol",
        corrupted: &[],
        threats: &[],
        detector: None,
        prediction: P::Never,
    },
    FraudScenario {
        id: ScenarioId::DuplicateUid,
        name: "duplicate-uid",
        summary: "the RO accepts accomplices a second time under the same uid",
        corrupted: &[RegistrationOfficer, Voter],
        threats: &[T::MultipleRegistrations, T::DoubleVoting],
        detector: Some("err.uid-unique"),
        prediction: P::Certain,
    },
    FraudScenario {
        id: ScenarioId::PhantomErr,
        name: "phantom-err",
        summary: "at closing, the RO adds rows under unused uids with an accomplice's photograph",
        corrupted: &[RegistrationOfficer],
        threats: &[T::IneligibleOrFakeVoters],
        detector: Some("err.photo-uid"),
        prediction: P::ErrSample,
    },
    FraudScenario {
        id: ScenarioId::WrongEncryption,
        name: "wrong-encryption",
        summary: "the RO uploads eligibility data other than what it printed",
        corrupted: &[RegistrationOfficer],
        threats: &[T::DataEntryErrors, T::DenialOfVoting],
        detector: Some("reg.equality"),
        prediction: P::CutAndChoose,
    },
    FraudScenario {
        id: ScenarioId::DroppedRegistration,
        name: "dropped-registration",
        summary: "the RO hands out an Accept receipt but never uploads the row",
        corrupted: &[RegistrationOfficer],
        threats: &[T::DeletionOfRegistered, T::DenialOfRegistration],
        detector: Some("reg.err-row"),
        prediction: P::CutAndChoose,
    },
    FraudScenario {
        id: ScenarioId::FakeDupReg,
        name: "fake-dup-reg",
        summary: "the RO turns first-time registrants away as duplicates",
        corrupted: &[RegistrationOfficer],
        threats: &[T::DenialOfRegistration],
        detector: Some("reg.dup-fair"),
        prediction: P::ReceiptAudit,
    },
    FraudScenario {
        id: ScenarioId::EoDenial,
        name: "eo-denial",
        summary: "the EO marks eligible voters ineligible",
        corrupted: &[EligibilityOfficer],
        threats: &[T::DeletionOfRegistered, T::DenialOfVoting],
        detector: Some("cast.ineligible-fair"),
        prediction: P::ReceiptAudit,
    },
    FraudScenario {
        id: ScenarioId::ShuffleTamper,
        name: "shuffle-tamper",
        summary: "a server swaps two eligibility-data ciphertexts after mixing",
        corrupted: &[Server],
        threats: &[T::DataEntryErrors, T::DeletionOfRegistered],
        detector: Some("roll.shuffle"),
        prediction: P::Certain,
    },
    FraudScenario {
        id: ScenarioId::ShareForgery,
        name: "share-forgery",
        summary: "colluding servers forge decryption shares so a roll vid changes",
        corrupted: &[Server],
        threats: &[T::DeletionOfRegistered, T::IneligibleOrFakeVoters],
        detector: Some("roll.decryption"),
        prediction: P::Certain,
    },
    FraudScenario {
        id: ScenarioId::IneligibleApproved,
        name: "ineligible-approved",
        summary: "the EO approves ineligible registrants, who then cast",
        corrupted: &[EligibilityOfficer, Voter],
        threats: &[T::IneligibleVoting],
        detector: Some("er.cast-check"),
        prediction: P::ErSampleAdded,
    },
    FraudScenario {
        id: ScenarioId::AbsenteeStuffing,
        name: "absentee-stuffing",
        summary: "at closing, the PO casts valid votes for absentees under an accomplice's photograph",
        corrupted: &[PollingOfficer],
        threats: &[T::AbsenteeInjection],
        detector: Some("er.cast-check"),
        prediction: P::ErSampleWithin,
    },
    FraudScenario {
        id: ScenarioId::FakeDupCast,
        name: "fake-dup-cast",
        summary: "the PO turns voters away claiming they already cast",
        corrupted: &[PollingOfficer],
        threats: &[T::DenialOfVoting, T::ForcedAbstention],
        detector: Some("cast.dup-fair"),
        prediction: P::ReceiptAudit,
    },
    FraudScenario {
        id: ScenarioId::EvSubstitution,
        name: "ev-substitution",
        summary: "the PO publishes its own vote and prints the voter's",
        corrupted: &[PollingOfficer],
        threats: &[T::DenialOfVoting],
        detector: Some("cast.ev-published"),
        prediction: P::ReceiptAudit,
    },
    FraudScenario {
        id: ScenarioId::EvClash,
        name: "ev-clash",
        summary: "pairs of voters cast the same encrypted vote",
        corrupted: &[Voter],
        threats: &[T::DoubleVoting],
        detector: Some("er.ev-distinct"),
        prediction: P::Certain,
    },
    FraudScenario {
        id: ScenarioId::SkippedFill,
        name: "skipped-fill",
        summary: "the PO leaves absentee rows empty, marking who stayed away",
        corrupted: &[PollingOfficer],
        threats: &[T::VoterProfiling, T::ForcedAbstention],
        detector: Some("er.fill-complete"),
        prediction: P::Certain,
    },
    FraudScenario {
        id: ScenarioId::QuadrantLeak,
        name: "quadrant-leak",
        summary: "a voter discloses both halves of one registration receipt",
        corrupted: &[Voter],
        threats: &[T::VoterProfiling],
        detector: Some("privacy.quadrant-pairing"),
        prediction: P::Certain,
    },
];

pub fn catalog() -> &'static [FraudScenario] {
    &CATALOG
}

pub fn scenario(id: ScenarioId) -> &'static FraudScenario {
    CATALOG.iter().find(|s| s.id == id).expect("every id is catalogued")
}

/// Every threat with the scenarios that exercise it.
pub fn traceability() -> Vec<(Threat, Vec<ScenarioId>)> {
    Threat::ALL
        .into_iter()
        .map(|t| (t, CATALOG.iter().filter(|s| s.threats.contains(&t)).map(|s| s.id).collect()))
        .collect()
}
