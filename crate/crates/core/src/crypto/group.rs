//! Ristretto255 group elements with a cached canonical encoding.

use std::cmp::Ordering;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};

use curve25519_dalek::constants::{RISTRETTO_BASEPOINT_POINT, RISTRETTO_BASEPOINT_TABLE};
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::Identity;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha512};

use crate::encoding::{Decode, DecodeError, Encode, Reader, Writer};

/// Byte length of an encoded element or scalar.
pub const ENCODED_LEN: usize = 32;

/// A group element. The compressed form is computed once at construction so
/// that hashing and encoding never recompress.
#[derive(Clone, Copy)]
pub struct Element {
    point: RistrettoPoint,
    bytes: [u8; 32],
}

impl Element {
    pub fn from_point(point: RistrettoPoint) -> Self {
        Self { bytes: point.compress().to_bytes(), point }
    }

    pub fn identity() -> Self {
        Self::from_point(RistrettoPoint::identity())
    }

    pub fn generator() -> Self {
        Self::from_point(RISTRETTO_BASEPOINT_POINT)
    }

    /// g^s using the precomputed basepoint table.
    pub fn base_mul(s: &Scalar) -> Self {
        Self::from_point(RISTRETTO_BASEPOINT_TABLE * s)
    }

    pub fn from_canonical(bytes: &[u8; 32]) -> Result<Self, DecodeError> {
        let point = CompressedRistretto(*bytes).decompress().ok_or(DecodeError::InvalidElement)?;
        Ok(Self { point, bytes: *bytes })
    }

    /// Hashes `data` under a domain tag onto the group.
    pub fn hash_to_group(tag: &[u8], data: &[u8]) -> Self {
        let mut h = Sha512::new();
        h.update((tag.len() as u32).to_be_bytes());
        h.update(tag);
        h.update(data);
        let wide: [u8; 64] = h.finalize().into();
        Self::from_point(RistrettoPoint::from_uniform_bytes(&wide))
    }

    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self::from_point(RistrettoPoint::random(rng))
    }

    pub fn point(&self) -> &RistrettoPoint {
        &self.point
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.bytes
    }

    pub fn is_identity(&self) -> bool {
        self.bytes == [0u8; 32]
    }
}

pub fn random_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
    Scalar::random(rng)
}

/// Uniform 128-bit scalar, used for batch-verification weights.
pub fn random_weight<R: RngCore>(rng: &mut R) -> Scalar {
    let mut b = [0u8; 32];
    rng.fill_bytes(&mut b[..16]);
    Scalar::from_bytes_mod_order(b)
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.bytes == other.bytes
    }
}

impl Eq for Element {}

impl Hash for Element {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bytes.hash(state);
    }
}

impl PartialOrd for Element {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Element {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bytes.cmp(&other.bytes)
    }
}

impl std::fmt::Debug for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Element({})", hex::encode(&self.bytes[..8]))
    }
}

impl Add for Element {
    type Output = Element;
    fn add(self, rhs: Element) -> Element {
        Element::from_point(self.point + rhs.point)
    }
}

impl Sub for Element {
    type Output = Element;
    fn sub(self, rhs: Element) -> Element {
        Element::from_point(self.point - rhs.point)
    }
}

impl Neg for Element {
    type Output = Element;
    fn neg(self) -> Element {
        Element::from_point(-self.point)
    }
}

impl Mul<&Scalar> for &Element {
    type Output = Element;
    fn mul(self, rhs: &Scalar) -> Element {
        Element::from_point(self.point * rhs)
    }
}

impl Encode for Element {
    fn encode(&self, w: &mut Writer) {
        w.raw(&self.bytes);
    }
}

impl Decode for Element {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Self::from_canonical(&r.array()?)
    }
}

crate::serde_via_encoding!(Element);
