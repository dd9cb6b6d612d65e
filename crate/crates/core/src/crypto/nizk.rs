//! Plaintext-knowledge and plaintext-equality proofs.
//!
//! Both reduce to a batched discrete-log-equality relation: for every pair
//! (X_i, Y_i) the prover knows w_i with X_i = g^{w_i} and Y_i = pk^{w_i}.
//!
//! * knowledge of encryption: X = c1, Y = c2 / m, w = r
//! * equality: X = c1 / c1*, Y = c2 / c2*, w = r − r*
//!
//! The transcript is compact: one challenge and one response per pair, the
//! commitments being recomputed by the verifier. Encoded length is
//! 32 + 4 + 32·n bytes.

use curve25519_dalek::ristretto::RistrettoPoint;
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::VartimeMultiscalarMul;
use rand::{CryptoRng, RngCore};

use super::elgamal::Ciphertext;
use super::group::{random_scalar, Element};
use super::keys::JointPublicKey;
use super::transcript::{Transcript, TAG_ENC, TAG_EQ};
use super::CryptoError;
use crate::encoding::{Decode, DecodeError, Encode, Reader, Writer};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DleqProof {
    pub challenge: Scalar,
    pub responses: Vec<Scalar>,
}

impl DleqProof {
    pub fn encoded_len(pairs: usize) -> usize {
        32 + 4 + 32 * pairs
    }
}

/// Proof that each ciphertext encrypts the stated plaintext.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncKnowledgeProof(pub DleqProof);

/// Proof that each ciphertext pair encrypts equal plaintexts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqProof(pub DleqProof);

struct Relation {
    xs: Vec<RistrettoPoint>,
    ys: Vec<RistrettoPoint>,
}

fn dleq_challenge(base: &Transcript, commitments: &[(RistrettoPoint, RistrettoPoint)]) -> Scalar {
    let mut t = base.clone();
    for (a, b) in commitments {
        t.append_raw(a.compress().as_bytes());
        t.append_raw(b.compress().as_bytes());
    }
    t.challenge()
}

fn prove_dleq<R: RngCore + CryptoRng>(
    pk: &JointPublicKey,
    base: &Transcript,
    rel: &Relation,
    witnesses: &[Scalar],
    rng: &mut R,
) -> Result<DleqProof, CryptoError> {
    for (i, w) in witnesses.iter().enumerate() {
        if JointPublicKey::g_mul(w) != rel.xs[i] || pk.mul(w) != rel.ys[i] {
            return Err(CryptoError::WitnessMismatch { index: i });
        }
    }
    let nonces: Vec<Scalar> = witnesses.iter().map(|_| random_scalar(rng)).collect();
    let commitments: Vec<(RistrettoPoint, RistrettoPoint)> =
        nonces.iter().map(|k| (JointPublicKey::g_mul(k), pk.mul(k))).collect();
    let challenge = dleq_challenge(base, &commitments);
    let responses = nonces.iter().zip(witnesses).map(|(k, w)| k + challenge * w).collect();
    Ok(DleqProof { challenge, responses })
}

fn verify_dleq(pk: &JointPublicKey, base: &Transcript, rel: &Relation, proof: &DleqProof) -> bool {
    if proof.responses.len() != rel.xs.len() {
        return false;
    }
    let e = proof.challenge;
    let commitments: Vec<(RistrettoPoint, RistrettoPoint)> = proof
        .responses
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let a = RistrettoPoint::vartime_double_scalar_mul_basepoint(&-e, &rel.xs[i], z);
            let b = RistrettoPoint::vartime_multiscalar_mul([*z, -e], [*pk.element().point(), rel.ys[i]]);
            (a, b)
        })
        .collect();
    dleq_challenge(base, &commitments) == e
}

fn enc_statement(pk: &JointPublicKey, plaintexts: &[Element], cts: &[Ciphertext]) -> (Transcript, Relation) {
    let mut t = Transcript::new(TAG_ENC);
    t.append(pk);
    t.append(&plaintexts.to_vec());
    t.append(&cts.to_vec());
    let rel = Relation {
        xs: cts.iter().map(|c| *c.c1.point()).collect(),
        ys: cts.iter().zip(plaintexts).map(|(c, m)| c.c2.point() - m.point()).collect(),
    };
    (t, rel)
}

fn eq_statement(pk: &JointPublicKey, pairs: &[(Ciphertext, Ciphertext)]) -> (Transcript, Relation) {
    let mut t = Transcript::new(TAG_EQ);
    t.append(pk);
    t.append(&(pairs.len() as u32));
    for (a, b) in pairs {
        t.append(a);
        t.append(b);
    }
    let rel = Relation {
        xs: pairs.iter().map(|(a, b)| a.c1.point() - b.c1.point()).collect(),
        ys: pairs.iter().map(|(a, b)| a.c2.point() - b.c2.point()).collect(),
    };
    (t, rel)
}

pub fn prove_enc<R: RngCore + CryptoRng>(
    pk: &JointPublicKey,
    plaintexts: &[Element],
    cts: &[Ciphertext],
    randomness: &[Scalar],
    rng: &mut R,
) -> Result<EncKnowledgeProof, CryptoError> {
    if plaintexts.len() != cts.len() || cts.len() != randomness.len() || cts.is_empty() {
        return Err(CryptoError::Parameter("mismatched or empty statement".into()));
    }
    let (t, rel) = enc_statement(pk, plaintexts, cts);
    prove_dleq(pk, &t, &rel, randomness, rng).map(EncKnowledgeProof)
}

/// Never panics; malformed transcripts verify as false.
pub fn verify_enc(pk: &JointPublicKey, plaintexts: &[Element], cts: &[Ciphertext], proof: &EncKnowledgeProof) -> bool {
    if plaintexts.len() != cts.len() || cts.is_empty() {
        return false;
    }
    let (t, rel) = enc_statement(pk, plaintexts, cts);
    verify_dleq(pk, &t, &rel, &proof.0)
}

/// `randomness[i] = (r_i, r*_i)` for the pair `(c_i, c*_i)`.
pub fn prove_eq<R: RngCore + CryptoRng>(
    pk: &JointPublicKey,
    pairs: &[(Ciphertext, Ciphertext)],
    randomness: &[(Scalar, Scalar)],
    rng: &mut R,
) -> Result<EqProof, CryptoError> {
    if pairs.len() != randomness.len() || pairs.is_empty() {
        return Err(CryptoError::Parameter("mismatched or empty statement".into()));
    }
    let (t, rel) = eq_statement(pk, pairs);
    let w: Vec<Scalar> = randomness.iter().map(|(a, b)| a - b).collect();
    prove_dleq(pk, &t, &rel, &w, rng).map(EqProof)
}

pub fn verify_eq(pk: &JointPublicKey, pairs: &[(Ciphertext, Ciphertext)], proof: &EqProof) -> bool {
    if pairs.is_empty() {
        return false;
    }
    let (t, rel) = eq_statement(pk, pairs);
    verify_dleq(pk, &t, &rel, &proof.0)
}

impl Encode for DleqProof {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.challenge);
        w.seq(&self.responses);
    }
}

impl Decode for DleqProof {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { challenge: r.get()?, responses: r.seq()? })
    }
}

impl Encode for EncKnowledgeProof {
    fn encode(&self, w: &mut Writer) {
        self.0.encode(w);
    }
}

impl Decode for EncKnowledgeProof {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self(r.get()?))
    }
}

impl Encode for EqProof {
    fn encode(&self, w: &mut Writer) {
        self.0.encode(w);
    }
}

impl Decode for EqProof {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self(r.get()?))
    }
}

crate::serde_via_encoding!(EncKnowledgeProof);
crate::serde_via_encoding!(EqProof);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::elgamal::{encrypt, encrypt_random};
    use crate::crypto::keys::keygen;
    use crate::rng::Seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn setup() -> JointPublicKey {
        keygen(&[Seed::from_u64(1), Seed::from_u64(2)]).unwrap().0
    }

    fn msg(i: u64) -> Element {
        Element::hash_to_group(b"test", &i.to_be_bytes())
    }

    #[test]
    fn honest_enc_proof_verifies_and_binds_plaintext() {
        let pk = setup();
        let mut rng = Seed::from_u64(3).rng();
        let (c, r) = encrypt_random(&pk, &msg(1), &mut rng);
        let p = prove_enc(&pk, &[msg(1)], &[c], &[r], &mut rng).unwrap();
        assert!(verify_enc(&pk, &[msg(1)], &[c], &p));
        assert!(!verify_enc(&pk, &[msg(2)], &[c], &p));
    }

    #[test]
    fn prover_self_check_names_bad_pair() {
        let pk = setup();
        let mut rng = Seed::from_u64(4).rng();
        let ms = [msg(1), msg(2), msg(3)];
        let enc: Vec<_> = ms.iter().map(|m| encrypt_random(&pk, m, &mut rng)).collect();
        let cts: Vec<_> = enc.iter().map(|e| e.0).collect();
        let mut rs: Vec<_> = enc.iter().map(|e| e.1).collect();
        rs[1] += Scalar::ONE;
        assert_eq!(prove_enc(&pk, &ms, &cts, &rs, &mut rng).unwrap_err(), CryptoError::WitnessMismatch { index: 1 });
    }

    #[test]
    fn eq_proof_over_three_pairs() {
        let pk = setup();
        let mut rng = Seed::from_u64(5).rng();
        let mut pairs = vec![];
        let mut rs = vec![];
        for i in 0..3 {
            let (a, ra) = encrypt_random(&pk, &msg(i), &mut rng);
            let (b, rb) = encrypt_random(&pk, &msg(i), &mut rng);
            pairs.push((a, b));
            rs.push((ra, rb));
        }
        let p = prove_eq(&pk, &pairs, &rs, &mut rng).unwrap();
        assert!(verify_eq(&pk, &pairs, &p));
        assert_eq!(p.to_bytes().len(), DleqProof::encoded_len(3));
        pairs.swap(0, 1);
        assert!(!verify_eq(&pk, &pairs, &p));
    }

    #[test]
    fn eq_proof_cannot_be_made_for_different_plaintexts() {
        let pk = setup();
        let mut rng = Seed::from_u64(6).rng();
        let (a, ra) = encrypt_random(&pk, &msg(1), &mut rng);
        let (b, rb) = encrypt_random(&pk, &msg(2), &mut rng);
        assert!(prove_eq(&pk, &[(a, b)], &[(ra, rb)], &mut rng).is_err());
        // A proof for an honest pair does not transfer.
        let (b2, rb2) = encrypt_random(&pk, &msg(1), &mut rng);
        let p = prove_eq(&pk, &[(a, b2)], &[(ra, rb2)], &mut rng).unwrap();
        assert!(!verify_eq(&pk, &[(a, b)], &p));
    }

    #[test]
    fn wrong_length_transcript_is_false_not_panic() {
        let pk = setup();
        let c = encrypt(&pk, &msg(1), &Scalar::from(5u64));
        let p = EncKnowledgeProof(DleqProof { challenge: Scalar::ONE, responses: vec![] });
        assert!(!verify_enc(&pk, &[msg(1)], &[c], &p));
        assert!(!verify_enc(&pk, &[], &[], &p));
    }

    #[test]
    fn completeness_and_bit_mutation_fuzz() {
        let pk = setup();
        let mut rng = Seed::from_u64(7).rng();
        let mut accepted = 0;
        for i in 0..1000u64 {
            let m = msg(i);
            let (c, r) = encrypt_random(&pk, &m, &mut rng);
            let p = prove_enc(&pk, &[m], &[c], &[r], &mut rng).unwrap();
            assert!(verify_enc(&pk, &[m], &[c], &p));
            // Flip one bit in either the statement or the transcript.
            let mut stmt = [m.to_bytes(), c.to_bytes()].concat();
            let mut proof = p.to_bytes();
            let target = rng.gen_range(0..stmt.len() + proof.len());
            let bit = 1u8 << rng.gen_range(0..8);
            if target < stmt.len() {
                stmt[target] ^= bit;
            } else {
                proof[target - stmt.len()] ^= bit;
            }
            let parsed = (
                Element::from_bytes(&stmt[..32]),
                Ciphertext::from_bytes(&stmt[32..]),
                EncKnowledgeProof::from_bytes(&proof),
            );
            if let (Ok(m2), Ok(c2), Ok(p2)) = parsed {
                if verify_enc(&pk, &[m2], &[c2], &p2) {
                    accepted += 1;
                }
            }
        }
        assert_eq!(accepted, 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn eq_completeness(seed in any::<u64>(), n in 1usize..5) {
            let pk = setup();
            let mut rng = Seed::from_u64(seed).rng();
            let mut pairs = vec![];
            let mut rs = vec![];
            for i in 0..n as u64 {
                let (a, ra) = encrypt_random(&pk, &msg(i), &mut rng);
                let (b, rb) = encrypt_random(&pk, &msg(i), &mut rng);
                pairs.push((a, b));
                rs.push((ra, rb));
            }
            let p = prove_eq(&pk, &pairs, &rs, &mut rng).unwrap();
            prop_assert!(verify_eq(&pk, &pairs, &p));
            prop_assert_eq!(EqProof::from_bytes(&p.to_bytes()).unwrap(), p);
        }
    }
}
