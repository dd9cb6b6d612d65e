//! Verifiable threshold decryption and batched verification.

use curve25519_dalek::ristretto::RistrettoPoint;
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::{IsIdentity, VartimeMultiscalarMul};
use rand::{CryptoRng, RngCore};

use super::elgamal::Ciphertext;
use super::group::{random_scalar, random_weight, Element};
use super::keys::{JointPublicKey, KeyShare};
use super::transcript::{Transcript, TAG_DEC_SHARE};
use super::CryptoError;
use crate::encoding::{Decode, DecodeError, Encode, Reader, Writer};

/// Chaum–Pedersen proof that log_g(h_k) = log_{c1}(d_k), kept in the
/// commitment form (A, B, z) so that many proofs can be checked in one
/// multi-scalar multiplication.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareProof {
    pub a: Element,
    pub b: Element,
    pub z: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecryptionShare {
    pub index: u32,
    pub d: Element,
    pub proof: ShareProof,
}

fn share_challenge(index: u32, h: &Element, c1: &Element, d: &Element, a: &Element, b: &Element) -> Scalar {
    let mut t = Transcript::new(TAG_DEC_SHARE);
    t.append(&index);
    t.append(h);
    t.append(c1);
    t.append(d);
    t.append(a);
    t.append(b);
    t.challenge()
}

pub fn decryption_share<R: RngCore + CryptoRng>(key: &KeyShare, c: &Ciphertext, rng: &mut R) -> DecryptionShare {
    let x = key.secret();
    let d = c.c1.point() * x;
    let w = random_scalar(rng);
    let a = Element::base_mul(&w);
    let b = Element::from_point(c.c1.point() * w);
    let d = Element::from_point(d);
    let e = share_challenge(key.index, &key.public.h, &c.c1, &d, &a, &b);
    DecryptionShare { index: key.index, d, proof: ShareProof { a, b, z: w + e * x } }
}

pub fn verify_share(pk: &JointPublicKey, c: &Ciphertext, share: &DecryptionShare) -> bool {
    let Some(h) = pk.share(share.index) else { return false };
    let p = &share.proof;
    let e = share_challenge(share.index, &h.h, &c.c1, &share.d, &p.a, &p.b);
    let lhs_g = RistrettoPoint::vartime_double_scalar_mul_basepoint(&-e, h.h.point(), &p.z);
    let lhs_c = RistrettoPoint::vartime_multiscalar_mul([p.z, -e], [*c.c1.point(), *share.d.point()]);
    lhs_g == *p.a.point() && lhs_c == *p.b.point()
}

fn check_quorum(pk: &JointPublicKey, shares: &[DecryptionShare]) -> Result<(), CryptoError> {
    let kappa = pk.kappa();
    let mut seen = vec![false; kappa];
    for s in shares {
        let slot = (s.index as usize).checked_sub(1).filter(|i| *i < kappa);
        match slot {
            Some(i) if !seen[i] => seen[i] = true,
            _ => return Err(CryptoError::InvalidShare { index: s.index }),
        }
    }
    if shares.len() != kappa {
        return Err(CryptoError::IncompleteQuorum { expected: kappa, got: shares.len() });
    }
    Ok(())
}

/// m = c2 / Π d_k after checking the quorum and every share proof.
pub fn combine(pk: &JointPublicKey, c: &Ciphertext, shares: &[DecryptionShare]) -> Result<Element, CryptoError> {
    check_quorum(pk, shares)?;
    for s in shares {
        if !verify_share(pk, c, s) {
            return Err(CryptoError::InvalidShare { index: s.index });
        }
    }
    let sum: RistrettoPoint = shares.iter().map(|s| s.d.point()).sum();
    Ok(Element::from_point(c.c2.point() - sum))
}

/// Decryption with every server contributing; the shares double as the
/// public proof of correct decryption.
pub fn threshold_decrypt<R: RngCore + CryptoRng>(
    pk: &JointPublicKey,
    c: &Ciphertext,
    keys: &[KeyShare],
    rng: &mut R,
) -> Result<(Element, Vec<DecryptionShare>), CryptoError> {
    let shares: Vec<DecryptionShare> = keys.iter().map(|k| decryption_share(k, c, rng)).collect();
    let m = combine(pk, c, &shares)?;
    Ok((m, shares))
}

/// A claimed decryption: ciphertext, plaintext and the κ shares proving it.
#[derive(Clone, Debug)]
pub struct DecryptionClaim<'a> {
    pub ciphertext: &'a Ciphertext,
    pub plaintext: &'a Element,
    pub shares: &'a [DecryptionShare],
}

/// Checks one claim share by share.
pub fn verify_decryption(pk: &JointPublicKey, claim: &DecryptionClaim<'_>) -> bool {
    matches!(combine(pk, claim.ciphertext, claim.shares), Ok(m) if m == *claim.plaintext)
}

/// Small-exponent batch verification of many decryption claims.
///
/// Every share equation z·G = A + e·h_k and z·c1 = B + e·d, and every
/// plaintext equation c2 = m + Σ d, is weighted by an independent random
/// 128-bit scalar and the sum checked with one multi-scalar multiplication.
/// Coefficients of G, of each h_k and of each c1 are aggregated first.
pub fn batch_verify_decryption<R: RngCore>(
    pk: &JointPublicKey,
    claims: &[DecryptionClaim<'_>],
    rng: &mut R,
) -> Result<bool, CryptoError> {
    if claims.is_empty() {
        return Err(CryptoError::Parameter("batch verification needs at least one claim".into()));
    }
    let kappa = pk.kappa();
    let mut g_coeff = Scalar::ZERO;
    let mut h_coeff = vec![Scalar::ZERO; kappa];
    let mut scalars: Vec<Scalar> = Vec::with_capacity(claims.len() * (3 + 3 * kappa));
    let mut points: Vec<RistrettoPoint> = Vec::with_capacity(scalars.capacity());

    for claim in claims {
        if check_quorum(pk, claim.shares).is_err() {
            return Ok(false);
        }
        let c = claim.ciphertext;
        let v = random_weight(rng);
        let mut c1_coeff = Scalar::ZERO;
        for s in claim.shares {
            let h = &pk.shares()[s.index as usize - 1].h;
            let p = &s.proof;
            let e = share_challenge(s.index, h, &c.c1, &s.d, &p.a, &p.b);
            let wa = random_weight(rng);
            let wb = random_weight(rng);
            g_coeff += wa * p.z;
            h_coeff[s.index as usize - 1] -= wa * e;
            c1_coeff += wb * p.z;
            scalars.extend([-wa, -wb, -(wb * e) - v]);
            points.extend([*p.a.point(), *p.b.point(), *s.d.point()]);
        }
        scalars.extend([c1_coeff, v, -v]);
        points.extend([*c.c1.point(), *c.c2.point(), *claim.plaintext.point()]);
    }
    scalars.push(g_coeff);
    points.push(*Element::generator().point());
    for (k, share) in pk.shares().iter().enumerate() {
        scalars.push(h_coeff[k]);
        points.push(*share.h.point());
    }
    Ok(RistrettoPoint::vartime_multiscalar_mul(scalars, points).is_identity())
}

impl Encode for ShareProof {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.a);
        w.put(&self.b);
        w.put(&self.z);
    }
}

impl Decode for ShareProof {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { a: r.get()?, b: r.get()?, z: r.get()? })
    }
}

impl Encode for DecryptionShare {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.index);
        w.put(&self.d);
        w.put(&self.proof);
    }
}

impl Decode for DecryptionShare {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { index: r.u32()?, d: r.get()?, proof: r.get()? })
    }
}

crate::serde_via_encoding!(DecryptionShare);
