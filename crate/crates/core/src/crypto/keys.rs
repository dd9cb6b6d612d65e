//! (κ,κ) threshold key generation with proof of possession.

use std::sync::Arc;

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_TABLE;
use curve25519_dalek::ristretto::{RistrettoBasepointTable, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};

use super::group::{random_scalar, Element};
use super::transcript::{Transcript, TAG_POP};
use super::CryptoError;
use crate::encoding::{Decode, DecodeError, Encode, Reader, Writer};
use crate::rng::Seed;

/// Schnorr proof of knowledge of log_g(h), bound to the server index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PopProof {
    pub challenge: Scalar,
    pub response: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicShare {
    pub index: u32,
    pub h: Element,
    pub pop: PopProof,
}

#[derive(Clone)]
pub struct KeyShare {
    pub index: u32,
    secret: Scalar,
    pub public: PublicShare,
}

impl std::fmt::Debug for KeyShare {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyShare").field("index", &self.index).field("h", &self.public.h).finish()
    }
}

fn pop_challenge(index: u32, h: &Element, commitment: &Element) -> Scalar {
    let mut t = Transcript::new(TAG_POP);
    t.append(&index);
    t.append(h);
    t.append(commitment);
    t.challenge()
}

impl KeyShare {
    pub fn generate<R: RngCore + CryptoRng>(index: u32, rng: &mut R) -> Self {
        Self::from_secret(index, random_scalar(rng), rng)
    }

    pub fn from_secret<R: RngCore + CryptoRng>(index: u32, secret: Scalar, rng: &mut R) -> Self {
        let h = Element::base_mul(&secret);
        let w = random_scalar(rng);
        let a = Element::base_mul(&w);
        let challenge = pop_challenge(index, &h, &a);
        let response = w + challenge * secret;
        Self { index, secret, public: PublicShare { index, h, pop: PopProof { challenge, response } } }
    }

    pub fn secret(&self) -> &Scalar {
        &self.secret
    }
}

impl PublicShare {
    pub fn verify_pop(&self) -> bool {
        let a = Element::from_point(
            RistrettoPoint::vartime_double_scalar_mul_basepoint(
                &-self.pop.challenge,
                self.h.point(),
                &self.pop.response,
            ),
        );
        pop_challenge(self.index, &self.h, &a) == self.pop.challenge
    }
}

/// pk = Π h_k together with the shares it was built from.
#[derive(Clone)]
pub struct JointPublicKey {
    shares: Vec<PublicShare>,
    pk: Element,
    table: Arc<RistrettoBasepointTable>,
}

impl JointPublicKey {
    /// Verifies every proof of possession and that indices run 1..=κ.
    pub fn from_shares(shares: Vec<PublicShare>) -> Result<Self, CryptoError> {
        if shares.is_empty() {
            return Err(CryptoError::Parameter("server count κ must be at least 1".into()));
        }
        for (i, s) in shares.iter().enumerate() {
            if s.index as usize != i + 1 {
                return Err(CryptoError::Parameter(format!(
                    "share at position {i} has index {}, expected {}",
                    s.index,
                    i + 1
                )));
            }
            if !s.verify_pop() {
                return Err(CryptoError::InvalidPop { index: s.index });
            }
        }
        let pk = Element::from_point(shares.iter().map(|s| *s.h.point()).sum());
        let table = Arc::new(RistrettoBasepointTable::create(pk.point()));
        Ok(Self { shares, pk, table })
    }

    pub fn element(&self) -> &Element {
        &self.pk
    }

    pub fn shares(&self) -> &[PublicShare] {
        &self.shares
    }

    pub fn kappa(&self) -> usize {
        self.shares.len()
    }

    pub fn share(&self, index: u32) -> Option<&PublicShare> {
        self.shares.get((index as usize).checked_sub(1)?)
    }

    /// pk^s via the precomputed table.
    pub fn mul(&self, s: &Scalar) -> RistrettoPoint {
        &*self.table * s
    }

    pub fn g_mul(s: &Scalar) -> RistrettoPoint {
        RISTRETTO_BASEPOINT_TABLE * s
    }
}

impl PartialEq for JointPublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.shares == other.shares
    }
}

impl Eq for JointPublicKey {}

impl std::fmt::Debug for JointPublicKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "JointPublicKey(κ={}, {:?})", self.shares.len(), self.pk)
    }
}

/// Generates κ shares, one per server seed, and the joint key.
pub fn keygen(seeds: &[Seed]) -> Result<(JointPublicKey, Vec<KeyShare>), CryptoError> {
    if seeds.is_empty() {
        return Err(CryptoError::Parameter("server count κ must be at least 1".into()));
    }
    let keys: Vec<KeyShare> = seeds
        .iter()
        .enumerate()
        .map(|(i, s)| KeyShare::generate(i as u32 + 1, &mut s.rng()))
        .collect();
    let pk = JointPublicKey::from_shares(keys.iter().map(|k| k.public.clone()).collect())?;
    Ok((pk, keys))
}

impl Encode for PopProof {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.challenge);
        w.put(&self.response);
    }
}

impl Decode for PopProof {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { challenge: r.get()?, response: r.get()? })
    }
}

impl Encode for PublicShare {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.index);
        w.put(&self.h);
        w.put(&self.pop);
    }
}

impl Decode for PublicShare {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { index: r.u32()?, h: r.get()?, pop: r.get()? })
    }
}

impl Encode for JointPublicKey {
    fn encode(&self, w: &mut Writer) {
        w.seq(&self.shares);
    }
}

impl Decode for JointPublicKey {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Self::from_shares(r.seq()?).map_err(|_| DecodeError::Invalid("joint public key"))
    }
}

impl Encode for KeyShare {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.secret);
        w.put(&self.public);
    }
}

impl Decode for KeyShare {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let secret: Scalar = r.get()?;
        let public: PublicShare = r.get()?;
        if Element::base_mul(&secret) != public.h || !public.verify_pop() {
            return Err(DecodeError::Invalid("key share"));
        }
        Ok(Self { index: public.index, secret, public })
    }
}

crate::serde_via_encoding!(JointPublicKey);
crate::serde_via_encoding!(KeyShare);

#[cfg(test)]
mod tests {
    use super::*;

    fn seeds(n: usize) -> Vec<Seed> {
        (0..n as u64).map(|i| Seed::from_u64(100 + i)).collect()
    }

    #[test]
    fn single_server_key_is_its_share() {
        let (pk, keys) = keygen(&seeds(1)).unwrap();
        assert_eq!(*pk.element(), Element::base_mul(keys[0].secret()));
    }

    #[test]
    fn joint_key_is_product_of_emitted_shares() {
        let (pk, keys) = keygen(&seeds(3)).unwrap();
        let sum: Scalar = keys.iter().map(|k| k.secret()).sum();
        assert_eq!(*pk.element(), Element::base_mul(&sum));
        let product = keys.iter().fold(Element::identity(), |acc, k| acc + k.public.h);
        assert_eq!(*pk.element(), product);
    }

    #[test]
    fn corrupted_pop_is_rejected_by_index() {
        let (_, keys) = keygen(&seeds(3)).unwrap();
        let mut shares: Vec<PublicShare> = keys.iter().map(|k| k.public.clone()).collect();
        shares[1].pop.response += Scalar::ONE;
        assert_eq!(JointPublicKey::from_shares(shares).unwrap_err(), CryptoError::InvalidPop { index: 2 });
    }

    #[test]
    fn rogue_key_without_pop_is_rejected() {
        let (_, keys) = keygen(&seeds(2)).unwrap();
        let mut shares: Vec<PublicShare> = keys.iter().map(|k| k.public.clone()).collect();
        // Attacker picks h_2 = g^y - h_1 so that pk = g^y; it cannot prove possession.
        let y = Scalar::from(99u64);
        shares[1].h = Element::base_mul(&y) - shares[0].h;
        assert!(matches!(JointPublicKey::from_shares(shares), Err(CryptoError::InvalidPop { index: 2 })));
    }

    #[test]
    fn zero_servers_is_parameter_error() {
        assert!(matches!(keygen(&[]), Err(CryptoError::Parameter(_))));
    }

    #[test]
    fn key_encodings_round_trip() {
        let (pk, keys) = keygen(&seeds(3)).unwrap();
        assert_eq!(JointPublicKey::from_bytes(&pk.to_bytes()).unwrap(), pk);
        let k = KeyShare::from_bytes(&keys[2].to_bytes()).unwrap();
        assert_eq!(k.secret(), keys[2].secret());
    }
}
