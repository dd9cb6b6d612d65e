//! El Gamal encryption under the joint key, with re-encryption.

use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};

use super::group::{random_scalar, Element};
use super::keys::JointPublicKey;
use crate::encoding::{Decode, DecodeError, Encode, Reader, Writer};

/// (c1, c2) = (g^r, m·pk^r).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ciphertext {
    pub c1: Element,
    pub c2: Element,
}

pub const CIPHERTEXT_LEN: usize = 64;

impl Ciphertext {
    /// Zero-randomness ciphertexts are legal algebra but rejected by protocol validation.
    pub fn has_zero_randomness(&self) -> bool {
        self.c1.is_identity()
    }
}

pub fn encrypt(pk: &JointPublicKey, m: &Element, r: &Scalar) -> Ciphertext {
    Ciphertext {
        c1: Element::from_point(JointPublicKey::g_mul(r)),
        c2: Element::from_point(m.point() + pk.mul(r)),
    }
}

pub fn encrypt_random<R: RngCore + CryptoRng>(
    pk: &JointPublicKey,
    m: &Element,
    rng: &mut R,
) -> (Ciphertext, Scalar) {
    let r = random_scalar(rng);
    (encrypt(pk, m, &r), r)
}

/// Multiplies in an encryption of the identity with randomness `r`.
pub fn reencrypt(pk: &JointPublicKey, c: &Ciphertext, r: &Scalar) -> Ciphertext {
    if *r == Scalar::ZERO {
        return *c;
    }
    Ciphertext {
        c1: Element::from_point(c.c1.point() + JointPublicKey::g_mul(r)),
        c2: Element::from_point(c.c2.point() + pk.mul(r)),
    }
}

impl Encode for Ciphertext {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.c1);
        w.put(&self.c2);
    }
}

impl Decode for Ciphertext {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { c1: r.get()?, c2: r.get()? })
    }
}

crate::serde_via_encoding!(Ciphertext);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::keys::keygen;
    use crate::rng::Seed;

    #[test]
    fn zero_randomness_is_identity_and_message() {
        let (pk, _) = keygen(&[Seed::from_u64(1)]).unwrap();
        let m = Element::hash_to_group(b"t", b"m");
        let c = encrypt(&pk, &m, &Scalar::ZERO);
        assert!(c.c1.is_identity());
        assert_eq!(c.c2, m);
        assert!(c.has_zero_randomness());
    }

    #[test]
    fn encryption_is_probabilistic() {
        let (pk, _) = keygen(&[Seed::from_u64(1)]).unwrap();
        let m = Element::hash_to_group(b"t", b"m");
        let mut rng = Seed::from_u64(2).rng();
        let (a, _) = encrypt_random(&pk, &m, &mut rng);
        let (b, _) = encrypt_random(&pk, &m, &mut rng);
        assert_ne!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn reencrypt_with_zero_is_unchanged() {
        let (pk, _) = keygen(&[Seed::from_u64(1)]).unwrap();
        let m = Element::hash_to_group(b"t", b"m");
        let c = encrypt(&pk, &m, &Scalar::from(7u64));
        assert_eq!(reencrypt(&pk, &c, &Scalar::ZERO), c);
    }

    #[test]
    fn ciphertext_round_trip() {
        let (pk, _) = keygen(&[Seed::from_u64(1)]).unwrap();
        let c = encrypt(&pk, &Element::generator(), &Scalar::from(3u64));
        let bytes = c.to_bytes();
        assert_eq!(bytes.len(), CIPHERTEXT_LEN);
        assert_eq!(Ciphertext::from_bytes(&bytes).unwrap(), c);
    }
}
