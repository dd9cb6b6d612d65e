//! Registration and cast receipts.

use serde::{Deserialize, Serialize};

use crate::crypto::{Ciphertext, DecryptionShare, EncKnowledgeProof, EqProof};
use crate::encoding::{Decode, DecodeError, Encode, Reader, Writer};
use crate::world::PhotoToken;

/// Top-left quadrant: identity side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Q11 {
    pub uid: String,
    pub photo: PhotoToken,
    pub rho_enc1: EncKnowledgeProof,
}

/// Top-right quadrant: the uploaded ciphertexts and one share of ρ_eq.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Q12 {
    pub c_vid: Ciphertext,
    pub c_block: Ciphertext,
    pub c_ed: Ciphertext,
    pub c_photo: Ciphertext,
    #[serde(with = "hex_bytes")]
    pub rho_eq1: Vec<u8>,
}

/// Bottom-left quadrant: roll side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Q21 {
    pub vid: u64,
    pub block: u32,
    pub ed: String,
    pub rho_enc2: EncKnowledgeProof,
}

/// Bottom-right quadrant: fresh encryptions and the other share of ρ_eq.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Q22 {
    pub cs_vid: Ciphertext,
    pub cs_block: Ciphertext,
    pub cs_ed: Ciphertext,
    #[serde(with = "hex_bytes")]
    pub rho_eq2: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptReceipt {
    pub q11: Q11,
    pub q12: Q12,
    pub q21: Q21,
    pub q22: Q22,
}

impl AcceptReceipt {
    /// ρ_eq1 ⊕ ρ_eq2 parsed as an equality proof, if the shares line up.
    pub fn joined_eq_proof(q12: &Q12, q22: &Q22) -> Option<EqProof> {
        if q12.rho_eq1.len() != q22.rho_eq2.len() {
            return None;
        }
        let bytes: Vec<u8> = q12.rho_eq1.iter().zip(&q22.rho_eq2).map(|(a, b)| a ^ b).collect();
        EqProof::from_bytes(&bytes).ok()
    }

    /// Encoded size without the photograph payload.
    pub fn size_without_photo(&self) -> usize {
        self.to_bytes().len() - self.q11.photo.to_bytes().len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegReceipt {
    Reject { uid: String, pre: PhotoToken },
    DupReg { pre: PhotoToken, prior: PhotoToken },
    Accept(Box<AcceptReceipt>),
}

impl RegReceipt {
    pub fn kind(&self) -> &'static str {
        match self {
            RegReceipt::Reject { .. } => "reject",
            RegReceipt::DupReg { .. } => "dup-reg",
            RegReceipt::Accept(_) => "accept",
        }
    }

    pub fn accept(&self) -> Option<&AcceptReceipt> {
        match self {
            RegReceipt::Accept(a) => Some(a),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CastReceipt {
    /// Unknown vid.
    Reject { vid: u64 },
    /// The vid belongs to someone else.
    RejectWrongVid { vid: u64, pre: PhotoToken },
    /// The owner of the vid was deemed ineligible; carries the decrypted
    /// eligibility data and the decryption shares proving it.
    RejectIneligible { vid: u64, pre: PhotoToken, ed: String, shares: Vec<DecryptionShare> },
    DupCast { pre: PhotoToken, photo: PhotoToken },
    Accept { vid: u64, ev: Ciphertext },
}

impl CastReceipt {
    pub fn kind(&self) -> &'static str {
        match self {
            CastReceipt::Reject { .. } => "reject",
            CastReceipt::RejectWrongVid { .. } => "reject-wrong-vid",
            CastReceipt::RejectIneligible { .. } => "reject-ineligible",
            CastReceipt::DupCast { .. } => "dup-cast",
            CastReceipt::Accept { .. } => "accept",
        }
    }
}

impl Encode for Q11 {
    fn encode(&self, w: &mut Writer) {
        w.str(&self.uid);
        w.put(&self.photo);
        w.put(&self.rho_enc1);
    }
}

impl Decode for Q11 {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { uid: r.string()?, photo: r.get()?, rho_enc1: r.get()? })
    }
}

impl Encode for Q12 {
    fn encode(&self, w: &mut Writer) {
        for c in [&self.c_vid, &self.c_block, &self.c_ed, &self.c_photo] {
            w.put(c);
        }
        w.bytes(&self.rho_eq1);
    }
}

impl Decode for Q12 {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { c_vid: r.get()?, c_block: r.get()?, c_ed: r.get()?, c_photo: r.get()?, rho_eq1: r.bytes()? })
    }
}

impl Encode for Q21 {
    fn encode(&self, w: &mut Writer) {
        w.u64(self.vid);
        w.u32(self.block);
        w.str(&self.ed);
        w.put(&self.rho_enc2);
    }
}

impl Decode for Q21 {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { vid: r.u64()?, block: r.u32()?, ed: r.string()?, rho_enc2: r.get()? })
    }
}

impl Encode for Q22 {
    fn encode(&self, w: &mut Writer) {
        for c in [&self.cs_vid, &self.cs_block, &self.cs_ed] {
            w.put(c);
        }
        w.bytes(&self.rho_eq2);
    }
}

impl Decode for Q22 {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { cs_vid: r.get()?, cs_block: r.get()?, cs_ed: r.get()?, rho_eq2: r.bytes()? })
    }
}

impl Encode for AcceptReceipt {
    fn encode(&self, w: &mut Writer) {
        w.put(&self.q11);
        w.put(&self.q12);
        w.put(&self.q21);
        w.put(&self.q22);
    }
}

impl Decode for AcceptReceipt {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { q11: r.get()?, q12: r.get()?, q21: r.get()?, q22: r.get()? })
    }
}

impl Encode for RegReceipt {
    fn encode(&self, w: &mut Writer) {
        match self {
            RegReceipt::Reject { uid, pre } => {
                w.u8(1);
                w.str(uid);
                w.put(pre);
            }
            RegReceipt::DupReg { pre, prior } => {
                w.u8(2);
                w.put(pre);
                w.put(prior);
            }
            RegReceipt::Accept(a) => {
                w.u8(3);
                w.put(a.as_ref());
            }
        }
    }
}

impl Decode for RegReceipt {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(match r.u8()? {
            1 => RegReceipt::Reject { uid: r.string()?, pre: r.get()? },
            2 => RegReceipt::DupReg { pre: r.get()?, prior: r.get()? },
            3 => RegReceipt::Accept(Box::new(r.get()?)),
            t => return Err(DecodeError::InvalidTag(t)),
        })
    }
}

impl Encode for CastReceipt {
    fn encode(&self, w: &mut Writer) {
        match self {
            CastReceipt::Reject { vid } => {
                w.u8(1);
                w.u64(*vid);
            }
            CastReceipt::RejectWrongVid { vid, pre } => {
                w.u8(2);
                w.u64(*vid);
                w.put(pre);
            }
            CastReceipt::RejectIneligible { vid, pre, ed, shares } => {
                w.u8(3);
                w.u64(*vid);
                w.put(pre);
                w.str(ed);
                w.seq(shares);
            }
            CastReceipt::DupCast { pre, photo } => {
                w.u8(4);
                w.put(pre);
                w.put(photo);
            }
            CastReceipt::Accept { vid, ev } => {
                w.u8(5);
                w.u64(*vid);
                w.put(ev);
            }
        }
    }
}

impl Decode for CastReceipt {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(match r.u8()? {
            1 => CastReceipt::Reject { vid: r.u64()? },
            2 => CastReceipt::RejectWrongVid { vid: r.u64()?, pre: r.get()? },
            3 => CastReceipt::RejectIneligible { vid: r.u64()?, pre: r.get()?, ed: r.string()?, shares: r.seq()? },
            4 => CastReceipt::DupCast { pre: r.get()?, photo: r.get()? },
            5 => CastReceipt::Accept { vid: r.u64()?, ev: r.get()? },
            t => return Err(DecodeError::InvalidTag(t)),
        })
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
