//! Text file holding a shuffle proof together with the verifier defaults it
//! was produced under.

use std::fmt::Write as _;

use super::proof::ShuffleProof;
use crate::encoding::{Decode, Encode};

pub const FORMAT: &str = "eroll-shuffle-transcript/v1";
pub const CHALLENGE: &str = "sha512-wide-reduce";
pub const CHAIN_BATCHING: &str = "hash-weights-128";

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("missing or malformed header line `{0}`")]
    Header(&'static str),
    #[error("transcript was produced with {key} = {found}, expected {expected}")]
    Mismatch { key: &'static str, found: String, expected: String },
    #[error("proof body: {0}")]
    Body(String),
}

pub fn render(generator_seed: &str, proof: &ShuffleProof) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format {FORMAT}");
    let _ = writeln!(s, "generator-seed {generator_seed}");
    let _ = writeln!(s, "challenge {CHALLENGE}");
    let _ = writeln!(s, "chain-batching {CHAIN_BATCHING}");
    let _ = writeln!(s, "steps {}", proof.steps.len());
    let _ = writeln!(s, "proof {}", hex::encode(proof.to_bytes()));
    s
}

/// Returns the generator seed and the proof.
pub fn parse(text: &str) -> Result<(String, ShuffleProof), TranscriptError> {
    let mut lines = text.lines();
    let mut field = |key: &'static str| -> Result<String, TranscriptError> {
        let line = lines.next().ok_or(TranscriptError::Header(key))?;
        let rest = line.strip_prefix(key).and_then(|r| r.strip_prefix(' ')).ok_or(TranscriptError::Header(key))?;
        Ok(rest.to_string())
    };
    let expect = |key: &'static str, found: String, expected: &str| {
        if found == expected {
            Ok(())
        } else {
            Err(TranscriptError::Mismatch { key, found, expected: expected.to_string() })
        }
    };
    expect("format", field("format")?, FORMAT)?;
    let seed = field("generator-seed")?;
    expect("challenge", field("challenge")?, CHALLENGE)?;
    expect("chain-batching", field("chain-batching")?, CHAIN_BATCHING)?;
    let steps: usize = field("steps")?.parse().map_err(|_| TranscriptError::Header("steps"))?;
    let body = hex::decode(field("proof")?).map_err(|e| TranscriptError::Body(e.to_string()))?;
    let proof = ShuffleProof::from_bytes(&body).map_err(|e| TranscriptError::Body(e.to_string()))?;
    if proof.steps.len() != steps {
        return Err(TranscriptError::Body("step count does not match header".into()));
    }
    Ok((seed, proof))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_proof_round_trips_and_header_is_checked() {
        let text = render("seed-x", &ShuffleProof::default());
        let (seed, proof) = parse(&text).unwrap();
        assert_eq!(seed, "seed-x");
        assert!(proof.steps.is_empty());
        let bad = text.replace(CHAIN_BATCHING, "none");
        assert!(matches!(parse(&bad), Err(TranscriptError::Mismatch { key: "chain-batching", .. })));
    }
}
