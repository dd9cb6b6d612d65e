//! Stand-in for the end-to-end verifiable voting protocol.
//!
//! An encrypted vote is El Gamal under the stub key; its validity proof is a
//! Schnorr proof of knowledge of the encryption randomness, bound to the
//! whole ciphertext. Dummy votes carry 64 random bytes in place of the proof,
//! the same length and format as a real one.

use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};

use crate::crypto::transcript::TAG_STUB_VOTE;
use crate::crypto::{random_scalar, Ciphertext, Element, Transcript};
use crate::encoding::{Decode, Reader, Writer};
use crate::rng::Seed;

pub const RHO_EV_LEN: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StubVote {
    pub ev: Ciphertext,
    pub rho_ev: Vec<u8>,
}

pub struct StubAuthority {
    sk: Scalar,
    pk: Element,
    candidates: u32,
}

impl std::fmt::Debug for StubAuthority {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StubAuthority").field("pk", &self.pk).finish()
    }
}

fn candidate(i: u32) -> Element {
    Element::hash_to_group(b"eroll/stub-candidate/v1", &i.to_be_bytes())
}

fn challenge(pk: &Element, ev: &Ciphertext, a: &Element) -> Scalar {
    let mut t = Transcript::new(TAG_STUB_VOTE);
    t.append(pk);
    t.append(ev);
    t.append(a);
    t.challenge()
}

fn enc(pk: &Element, m: &Element, r: &Scalar) -> Ciphertext {
    Ciphertext { c1: Element::base_mul(r), c2: Element::from_point(pk.point() * r + m.point()) }
}

impl StubAuthority {
    pub fn new(seed: &Seed, candidates: u32) -> Self {
        let sk = random_scalar(&mut seed.derive("stub-key").rng());
        Self { sk, pk: Element::base_mul(&sk), candidates: candidates.max(1) }
    }

    pub fn public_key(&self) -> &Element {
        &self.pk
    }

    /// A valid encrypted vote for a random candidate.
    pub fn cast<R: RngCore + CryptoRng>(&self, rng: &mut R) -> StubVote {
        let choice = (rng.next_u32()) % self.candidates;
        let r = random_scalar(rng);
        let ev = enc(&self.pk, &candidate(choice), &r);
        let w = random_scalar(rng);
        let a = Element::base_mul(&w);
        let e = challenge(&self.pk, &ev, &a);
        let z = w + e * r;
        let mut wr = Writer::new();
        wr.put(&e);
        wr.put(&z);
        StubVote { ev, rho_ev: wr.into_inner() }
    }

    /// A dummy vote: an encryption of the identity with a junk proof.
    pub fn dummy<R: RngCore + CryptoRng>(&self, rng: &mut R) -> StubVote {
        let ev = enc(&self.pk, &Element::identity(), &random_scalar(rng));
        let mut wr = Writer::new();
        wr.put(&random_scalar(rng));
        wr.put(&random_scalar(rng));
        StubVote { ev, rho_ev: wr.into_inner() }
    }

    /// Tally-side decryption, used only to check the candidate range in tests.
    pub fn open(&self, ev: &Ciphertext) -> Option<u32> {
        let m = Element::from_point(ev.c2.point() - ev.c1.point() * self.sk);
        (0..self.candidates).find(|&i| candidate(i) == m)
    }
}

/// Valid(ρ_ev, ev).
pub fn stub_valid(pk: &Element, rho_ev: &[u8], ev: &Ciphertext) -> bool {
    if rho_ev.len() != RHO_EV_LEN {
        return false;
    }
    let mut r = Reader::new(rho_ev);
    let (Ok(e), Ok(z)) = (Scalar::decode(&mut r), Scalar::decode(&mut r)) else {
        return false;
    };
    let a = Element::from_point(Element::base_mul(&z).point() - ev.c1.point() * e);
    challenge(pk, ev, &a) == e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::Encode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn real_votes_verify_and_dummies_do_not() {
        let stub = StubAuthority::new(&Seed::from_u64(1), 3);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let v = stub.cast(&mut rng);
        assert!(stub_valid(stub.public_key(), &v.rho_ev, &v.ev));
        assert!(stub.open(&v.ev).is_some());
        let d = stub.dummy(&mut rng);
        assert!(!stub_valid(stub.public_key(), &d.rho_ev, &d.ev));
        // The proof is bound to its ciphertext.
        assert!(!stub_valid(stub.public_key(), &v.rho_ev, &d.ev));
        assert!(!stub_valid(stub.public_key(), &[], &v.ev));
    }

    #[test]
    fn dummy_and_real_byte_profiles_match() {
        let stub = StubAuthority::new(&Seed::from_u64(1), 5);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let (v, d) = (stub.cast(&mut rng), stub.dummy(&mut rng));
            assert_eq!(v.ev.to_bytes().len(), d.ev.to_bytes().len());
            assert_eq!(v.rho_ev.len(), d.rho_ev.len());
            assert_eq!(v.rho_ev.len(), RHO_EV_LEN);
            // Both proof halves are canonical scalars in either case.
            for rho in [&v.rho_ev, &d.rho_ev] {
                assert!(Scalar::decode(&mut Reader::new(&rho[..32])).is_ok());
                assert!(Scalar::decode(&mut Reader::new(&rho[32..])).is_ok());
            }
        }
    }
}
