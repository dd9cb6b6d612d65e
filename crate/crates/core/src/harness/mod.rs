//! Adversary harness: a catalog of fraud scenarios, each bound to the check
//! meant to expose it, and a Monte-Carlo driver that measures detection
//! rates against their predicted values.

pub mod adversary;
mod privacy;
mod run;
mod scenarios;

pub use privacy::{privacy_accounting, PrivacyReport};
pub use run::Run;
pub use scenarios::{catalog, scenario, traceability, FraudScenario, Prediction, Role, ScenarioId, Threat};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::protocol::ProtocolError;
use crate::rng::Seed;

/// How far each trial runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialDepth {
    /// Registration through the universal audit, every individual audit and
    /// the privacy accounting.
    Full,
    /// Stops once the stage holding the scenario's detector has run.
    ThroughDetector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    /// Honest eligible voters.
    pub voters: usize,
    /// Fraud instances planted per trial.
    pub frauds: usize,
    pub alpha: u32,
    pub kappa: usize,
    pub blocks: u32,
    pub booths_per_block: u32,
    /// Chance that a voter hands their receipts to an auditor.
    pub audit_rate: f64,
    pub depth: TrialDepth,
}

impl Default for TrialParams {
    fn default() -> Self {
        Self {
            voters: 40,
            frauds: 2,
            alpha: 10,
            kappa: 2,
            blocks: 1,
            booths_per_block: 1,
            audit_rate: 0.5,
            depth: TrialDepth::Full,
        }
    }
}

/// Outcome of one trial: every check that failed, alarms and privacy
/// findings included.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub fired: Vec<String>,
}

impl TrialOutcome {
    pub fn detected(&self) -> bool {
        !self.fired.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub scenario: String,
    pub detector: Option<String>,
    pub params: TrialParams,
    pub seed: String,
    pub trials: usize,
    pub detections: usize,
    pub rate: f64,
    pub predicted: f64,
    pub std_error: f64,
    pub tolerance: f64,
    /// Trials in which each check fired.
    pub fired: BTreeMap<String, usize>,
    /// Checks other than the detector that fired.
    pub stray: Vec<String>,
    pub pass: bool,
}

/// Runs `trials` independent trials of a scenario. Trial `t` draws all its
/// randomness from `seed` and `t`, so reports replay exactly.
pub fn run_scenario(id: ScenarioId, params: &TrialParams, seed: Seed, trials: usize) -> Result<TrialReport, ProtocolError> {
    let sc = scenario(id);
    sc.validate(params)?;
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| run::trial(id, params, seed.derive_index("trial", t as u64)))
        .collect::<Result<_, _>>()?;
    let mut fired: BTreeMap<String, usize> = BTreeMap::new();
    let mut detections = 0;
    for out in outcomes {
        detections += usize::from(out.detected());
        for name in out.fired {
            *fired.entry(name).or_default() += 1;
        }
    }
    let predicted = sc.predicted(params)?;
    let rate = if trials == 0 { 0.0 } else { detections as f64 / trials as f64 };
    let std_error = if trials == 0 { 0.0 } else { (predicted * (1.0 - predicted) / trials as f64).sqrt() };
    let tolerance = 3.0 * std_error + 1e-9;
    let stray: Vec<String> = fired.keys().filter(|k| Some(k.as_str()) != sc.detector).cloned().collect();
    Ok(TrialReport {
        scenario: id.name().to_string(),
        detector: sc.detector.map(str::to_string),
        params: params.clone(),
        seed: hex::encode(seed.0),
        trials,
        detections,
        rate,
        predicted,
        std_error,
        tolerance,
        pass: trials > 0 && (rate - predicted).abs() <= tolerance && stray.is_empty(),
        fired,
        stray,
    })
}

#[cfg(test)]
mod tests;
