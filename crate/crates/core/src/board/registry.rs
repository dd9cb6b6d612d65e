//! Payload registry: arbitrary-length plaintexts are encrypted as the group
//! element `HashToGroup(m)`; the servers keep the map back to `m` and release
//! it only against a logged authorization.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::records::{AuthEntry, Recipient};
use crate::crypto::Element;
use crate::encoding::{Decode, DecodeError, Encode, Reader, Writer};
use crate::world::PhotoToken;

pub const PAYLOAD_TAG: &[u8] = b"eroll/payload/v1";

pub fn payload_element(m: &[u8]) -> Element {
    Element::hash_to_group(PAYLOAD_TAG, m)
}

/// Typed plaintexts carried in ciphertext columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Vid(u64),
    Block(u32),
    Ed(String),
    Photo(PhotoToken),
    /// Serialized vote-validity proof.
    RhoEv(Vec<u8>),
    /// The designated empty value used for dummy casting information.
    Bottom,
}

impl Payload {
    pub fn element(&self) -> Element {
        payload_element(&self.to_bytes())
    }

    /// Vid and block payloads are published during roll preparation.
    pub fn is_public(&self) -> bool {
        matches!(self, Payload::Vid(_) | Payload::Block(_))
    }
}

impl Encode for Payload {
    fn encode(&self, w: &mut Writer) {
        match self {
            Payload::Vid(v) => {
                w.u8(1);
                w.u64(*v);
            }
            Payload::Block(j) => {
                w.u8(2);
                w.u32(*j);
            }
            Payload::Ed(s) => {
                w.u8(3);
                w.str(s);
            }
            Payload::Photo(p) => {
                w.u8(4);
                w.put(p);
            }
            Payload::RhoEv(b) => {
                w.u8(5);
                w.bytes(b);
            }
            Payload::Bottom => w.u8(6),
        }
    }
}

impl Decode for Payload {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(match r.u8()? {
            1 => Payload::Vid(r.u64()?),
            2 => Payload::Block(r.u32()?),
            3 => Payload::Ed(r.string()?),
            4 => Payload::Photo(r.get()?),
            5 => Payload::RhoEv(r.bytes()?),
            6 => Payload::Bottom,
            t => return Err(DecodeError::InvalidTag(t)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("element is not in the payload registry")]
    Unknown,
    #[error("no logged authorization for {0:?} to decode this element")]
    Unauthorized(Recipient),
    #[error("payload is not public")]
    NotPublic,
    #[error("registry entry does not decode: {0}")]
    Corrupt(DecodeError),
}

/// Element → payload bytes, plus the set of granted lookups.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PayloadRegistry {
    #[serde(with = "entries_hex")]
    entries: BTreeMap<Element, Vec<u8>>,
    #[serde(skip)]
    grants: HashSet<(Recipient, Element)>,
}

impl PayloadRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Registers raw bytes and returns their element.
    pub fn encode_bytes(&mut self, m: &[u8]) -> Element {
        let e = payload_element(m);
        self.entries.entry(e).or_insert_with(|| m.to_vec());
        e
    }

    pub fn encode(&mut self, p: &Payload) -> Element {
        self.encode_bytes(&p.to_bytes())
    }

    /// Records a grant; the caller must have logged `grant` on the board.
    pub fn authorize(&mut self, grant: &AuthEntry) {
        self.grants.insert((grant.recipient, grant.element));
    }

    /// Rebuilds the grant set from a board authorization log.
    pub fn restore_grants<'a>(&mut self, log: impl IntoIterator<Item = &'a AuthEntry>) {
        for g in log {
            self.authorize(g);
        }
    }

    pub fn decode_bytes(&self, grant: &AuthEntry) -> Result<&[u8], RegistryError> {
        let m = self.entries.get(&grant.element).ok_or(RegistryError::Unknown)?;
        if !self.grants.contains(&(grant.recipient, grant.element)) {
            return Err(RegistryError::Unauthorized(grant.recipient));
        }
        Ok(m)
    }

    pub fn decode(&self, grant: &AuthEntry) -> Result<Payload, RegistryError> {
        Payload::from_bytes(self.decode_bytes(grant)?).map_err(RegistryError::Corrupt)
    }

    /// Lookup of vid and block payloads, which are public by design.
    pub fn decode_public(&self, e: &Element) -> Result<Payload, RegistryError> {
        let m = self.entries.get(e).ok_or(RegistryError::Unknown)?;
        let p = Payload::from_bytes(m).map_err(RegistryError::Corrupt)?;
        if p.is_public() {
            Ok(p)
        } else {
            Err(RegistryError::NotPublic)
        }
    }
}

mod entries_hex {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<Element, Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = m.values().map(hex::encode).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Element, Vec<u8>>, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        v.into_iter()
            .map(|h| {
                let m = hex::decode(&h).map_err(serde::de::Error::custom)?;
                Ok((payload_element(&m), m))
            })
            .collect()
    }
}
