//! Simulated physical oracles over a synthetic population.
//!
//! Photos are capability tokens: the subject id is sealed under the world
//! key and the whole token is MACed, so only [`World`] can tell who a photo
//! shows or mint a token that passes liveness. Protocol code handles tokens
//! as opaque bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Mutex;

use hmac::{Hmac, Mac};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::encoding::{Decode, DecodeError, Encode, Reader, Writer};
use crate::rng::Seed;

type HmacSha256 = Hmac<Sha256>;

pub type SubjectId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Env {
    /// Pre-registration booth.
    PreRegistration,
    /// Official registration.
    Registration,
    /// Pre-casting booth.
    PreCasting,
    /// Official casting.
    Casting,
    /// Anywhere outside a booth.
    Outside,
}

impl Env {
    pub const ALL: [Env; 5] = [Env::PreRegistration, Env::Registration, Env::PreCasting, Env::Casting, Env::Outside];

    pub fn name(self) -> &'static str {
        match self {
            Env::PreRegistration => "env_pr",
            Env::Registration => "env_r",
            Env::PreCasting => "env_pc",
            Env::Casting => "env_c",
            Env::Outside => "env_out",
        }
    }

    fn code(self) -> u8 {
        self as u8
    }

    fn from_code(c: u8) -> Option<Env> {
        Env::ALL.get(c as usize).copied()
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const PHOTO_LEN: usize = 8 + 1 + 16 + 32;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhotoToken {
    sealed: [u8; 8],
    env: Env,
    nonce: [u8; 16],
    mac: [u8; 32],
}

impl PhotoToken {
    pub fn env(&self) -> Env {
        self.env
    }

    /// Builds an arbitrary, generally uncertified token. Adversaries use this
    /// to attempt forgeries.
    pub fn forged(sealed: [u8; 8], env: Env, nonce: [u8; 16], mac: [u8; 32]) -> Self {
        Self { sealed, env, nonce, mac }
    }

    /// Same token with a different environment label (MAC left unchanged).
    pub fn relabelled(&self, env: Env) -> Self {
        Self { env, ..*self }
    }
}

impl fmt::Debug for PhotoToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Photo({}, {})", self.env, hex::encode(&self.nonce[..6]))
    }
}

impl Encode for PhotoToken {
    fn encode(&self, w: &mut Writer) {
        w.raw(&self.sealed);
        w.u8(self.env.code());
        w.raw(&self.nonce);
        w.raw(&self.mac);
    }
}

impl Decode for PhotoToken {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let sealed = r.array()?;
        let code = r.u8()?;
        let env = Env::from_code(code).ok_or(DecodeError::InvalidTag(code))?;
        Ok(Self { sealed, env, nonce: r.array()?, mac: r.array()? })
    }
}

crate::serde_via_encoding!(PhotoToken);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldVoter {
    pub subject: SubjectId,
    /// Identifier in the primary identity system.
    pub uid: Option<String>,
    /// Eligibility data strings that make this subject eligible.
    pub eligibility: BTreeSet<String>,
    pub honest: bool,
}

impl WorldVoter {
    pub fn is_eligible(&self) -> bool {
        !self.eligibility.is_empty()
    }
}

/// Who is asking for a capture.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Authority {
    /// An officer with `subject` physically present in a booth.
    Session { subject: SubjectId, phase: Phase },
    /// Anyone else.
    Adversary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Registration,
    Casting,
}

impl Phase {
    fn envs(self) -> [Env; 2] {
        match self {
            Phase::Registration => [Env::PreRegistration, Env::Registration],
            Phase::Casting => [Env::PreCasting, Env::Casting],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CapturePolicy {
    /// Sessions capture their own subject in their phase's environments;
    /// outside a session, honest subjects never appear in env_r or env_c.
    #[default]
    Strict,
    /// Any capture is allowed.
    Permissive,
}

/// Deliberate breaks of the oracle assumptions, for negative tests only.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    #[default]
    None,
    /// `match` conflates each listed pair of subjects.
    Twins(Vec<(SubjectId, SubjectId)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Oracle {
    Capture,
    Live,
    Match,
    Elg,
    Uid,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCall {
    pub oracle: Oracle,
    /// Subjects behind the tokens involved; `None` for uncertified tokens.
    pub subjects: Vec<Option<SubjectId>>,
    pub env: Option<Env>,
    pub result: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorldError {
    #[error("unknown subject {0}")]
    UnknownSubject(SubjectId),
    #[error("capture of subject {subject} in {env} not authorized for {authority:?}")]
    Unauthorized { subject: SubjectId, env: Env, authority: Authority },
}

struct State {
    counter: u64,
    log: Vec<OracleCall>,
    logging: bool,
}

pub struct World {
    key: [u8; 32],
    voters: BTreeMap<SubjectId, WorldVoter>,
    policy: CapturePolicy,
    violation: Violation,
    state: Mutex<State>,
}

impl fmt::Debug for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("World")
            .field("voters", &self.voters.len())
            .field("policy", &self.policy)
            .field("violation", &self.violation)
            .finish()
    }
}

impl World {
    pub fn new(seed: Seed, voters: Vec<WorldVoter>, policy: CapturePolicy, violation: Violation) -> Self {
        let mut key = [0u8; 32];
        seed.derive("world-key").rng().fill_bytes(&mut key);
        Self {
            key,
            voters: voters.into_iter().map(|v| (v.subject, v)).collect(),
            policy,
            violation,
            state: Mutex::new(State { counter: 0, log: vec![], logging: true }),
        }
    }

    pub fn from_fixture(f: &Fixture, policy: CapturePolicy, violation: Violation) -> Self {
        Self::new(f.seed.derive("world"), f.voters.clone(), policy, violation)
    }

    pub fn voter(&self, subject: SubjectId) -> Option<&WorldVoter> {
        self.voters.get(&subject)
    }

    pub fn voters(&self) -> impl Iterator<Item = &WorldVoter> {
        self.voters.values()
    }

    pub fn policy(&self) -> CapturePolicy {
        self.policy
    }

    /// True when an assumption-violation mode is in force; reports carry it.
    pub fn violations_active(&self) -> bool {
        self.violation != Violation::None
    }

    /// Oracle calls so far, in order.
    pub fn calls(&self) -> Vec<OracleCall> {
        self.state.lock().expect("world lock").log.clone()
    }

    pub fn call_count(&self) -> usize {
        self.state.lock().expect("world lock").log.len()
    }

    /// Number of photos issued so far; persisted so a reloaded world keeps
    /// issuing fresh nonces.
    pub fn issued(&self) -> u64 {
        self.state.lock().expect("world lock").counter
    }

    pub fn resume(&self, issued: u64) {
        self.state.lock().expect("world lock").counter = issued;
    }

    /// Switches call logging on or off (long statistical runs turn it off).
    pub fn set_logging(&self, on: bool) {
        self.state.lock().expect("world lock").logging = on;
    }

    fn record(&self, oracle: Oracle, subjects: Vec<Option<SubjectId>>, env: Option<Env>, result: bool) {
        let mut st = self.state.lock().expect("world lock");
        if st.logging {
            st.log.push(OracleCall { oracle, subjects, env, result });
        }
    }

    fn pad(&self, nonce: &[u8; 16]) -> [u8; 8] {
        let mut m = HmacSha256::new_from_slice(&self.key).expect("hmac key");
        m.update(b"eroll/photo-seal/v1");
        m.update(nonce);
        let out = m.finalize().into_bytes();
        out[..8].try_into().expect("8 bytes")
    }

    fn tag(&self, sealed: &[u8; 8], env: Env, nonce: &[u8; 16]) -> HmacSha256 {
        let mut m = HmacSha256::new_from_slice(&self.key).expect("hmac key");
        m.update(b"eroll/photo-mac/v1");
        m.update(sealed);
        m.update(&[env.code()]);
        m.update(nonce);
        m
    }

    /// Subject behind a certified token.
    fn certified_subject(&self, p: &PhotoToken) -> Option<SubjectId> {
        self.tag(&p.sealed, p.env, &p.nonce).verify_slice(&p.mac).ok()?;
        let pad = self.pad(&p.nonce);
        let mut id = [0u8; 8];
        for i in 0..8 {
            id[i] = p.sealed[i] ^ pad[i];
        }
        Some(u64::from_be_bytes(id))
    }

    fn authorized(&self, v: &WorldVoter, env: Env, authority: Authority) -> bool {
        match (self.policy, authority) {
            (CapturePolicy::Permissive, _) => true,
            (CapturePolicy::Strict, Authority::Session { subject, phase }) => {
                subject == v.subject && phase.envs().contains(&env)
            }
            (CapturePolicy::Strict, Authority::Adversary) => {
                !v.honest || !matches!(env, Env::Registration | Env::Casting)
            }
        }
    }

    pub fn capture(&self, subject: SubjectId, env: Env, authority: Authority) -> Result<PhotoToken, WorldError> {
        let v = self.voters.get(&subject).ok_or(WorldError::UnknownSubject(subject))?;
        let ok = self.authorized(v, env, authority);
        self.record(Oracle::Capture, vec![Some(subject)], Some(env), ok);
        if !ok {
            return Err(WorldError::Unauthorized { subject, env, authority });
        }
        let counter = {
            let mut st = self.state.lock().expect("world lock");
            st.counter += 1;
            st.counter
        };
        let mut nonce = [0u8; 16];
        nonce[..8].copy_from_slice(&counter.to_be_bytes());
        let mut m = HmacSha256::new_from_slice(&self.key).expect("hmac key");
        m.update(b"eroll/photo-nonce/v1");
        m.update(&counter.to_be_bytes());
        nonce[8..].copy_from_slice(&m.finalize().into_bytes()[..8]);
        let pad = self.pad(&nonce);
        let mut sealed = subject.to_be_bytes();
        for i in 0..8 {
            sealed[i] ^= pad[i];
        }
        let mac = self.tag(&sealed, env, &nonce).finalize().into_bytes().into();
        Ok(PhotoToken { sealed, env, nonce, mac })
    }

    pub fn live(&self, p: &PhotoToken, env: Env) -> bool {
        let s = self.certified_subject(p);
        let ok = s.is_some() && p.env == env;
        self.record(Oracle::Live, vec![s], Some(env), ok);
        ok
    }

    fn same_subject(&self, a: SubjectId, b: SubjectId) -> bool {
        a == b
            || match &self.violation {
                Violation::None => false,
                Violation::Twins(pairs) => pairs.iter().any(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b)),
            }
    }

    pub fn matches(&self, p: &PhotoToken, q: &PhotoToken) -> bool {
        let (a, b) = (self.certified_subject(p), self.certified_subject(q));
        let ok = matches!((a, b), (Some(a), Some(b)) if self.same_subject(a, b));
        self.record(Oracle::Match, vec![a, b], None, ok);
        ok
    }

    pub fn eligible(&self, p: &PhotoToken, ed: &[u8]) -> bool {
        let s = self.certified_subject(p);
        let ok = s
            .and_then(|s| self.voters.get(&s))
            .is_some_and(|v| std::str::from_utf8(ed).is_ok_and(|ed| v.eligibility.contains(ed)));
        self.record(Oracle::Elg, vec![s], None, ok);
        ok
    }

    pub fn has_uid(&self, p: &PhotoToken, uid: &str) -> bool {
        let s = self.certified_subject(p);
        let ok = s.and_then(|s| self.voters.get(&s)).is_some_and(|v| v.uid.as_deref() == Some(uid));
        self.record(Oracle::Uid, vec![s], None, ok);
        ok
    }
}

/// What a voter brings to registration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Citizen {
    pub subject: SubjectId,
    pub uid: String,
    pub ed: String,
    pub block: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub honest_eligible: usize,
    pub honest_ineligible: usize,
    pub dishonest_eligible: usize,
    pub dishonest_ineligible: usize,
    /// Extra dishonest, ineligible subjects with no identifier at all.
    pub without_uid: usize,
    pub blocks: u32,
    /// Pairs of subjects that are (wrongly) given the same identifier.
    pub shared_uid_pairs: usize,
}

impl FixtureSpec {
    pub fn honest(n: usize, blocks: u32) -> Self {
        Self {
            honest_eligible: n,
            honest_ineligible: 0,
            dishonest_eligible: 0,
            dishonest_ineligible: 0,
            without_uid: 0,
            blocks,
            shared_uid_pairs: 0,
        }
    }

    pub fn total(&self) -> usize {
        self.honest_eligible + self.honest_ineligible + self.dishonest_eligible + self.dishonest_ineligible + self.without_uid
    }
}

/// Deterministic population: world-side truth plus what each person carries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    pub seed: Seed,
    pub spec: FixtureSpec,
    pub voters: Vec<WorldVoter>,
    pub citizens: Vec<Citizen>,
}

impl Fixture {
    pub fn generate(seed: Seed, spec: FixtureSpec) -> Self {
        let mut rng = seed.derive("fixture").rng();
        let blocks = spec.blocks.max(1);
        let mut uids = BTreeSet::new();
        let mut fresh_uid = |rng: &mut ChaCha20Rng| loop {
            let u = format!("U{:010}", rng.gen_range(0..10_000_000_000u64));
            if uids.insert(u.clone()) {
                return u;
            }
        };
        let groups = [
            (spec.honest_eligible, true, true, true),
            (spec.honest_ineligible, true, false, true),
            (spec.dishonest_eligible, false, true, true),
            (spec.dishonest_ineligible, false, false, true),
            (spec.without_uid, false, false, false),
        ];
        let mut voters = vec![];
        let mut citizens = vec![];
        for (count, honest, eligible, has_uid) in groups {
            for _ in 0..count {
                let subject = voters.len() as SubjectId;
                let uid = fresh_uid(&mut rng);
                let block = rng.gen_range(1..=blocks);
                let ed = format!("ed;subject={subject};block={block};doc={:016x}", rng.next_u64());
                let mut eligibility = BTreeSet::new();
                if eligible {
                    eligibility.insert(ed.clone());
                }
                voters.push(WorldVoter { subject, uid: has_uid.then(|| uid.clone()), eligibility, honest });
                citizens.push(Citizen { subject, uid, ed, block });
            }
        }
        let with_uid: Vec<usize> = (0..voters.len()).filter(|&i| voters[i].uid.is_some()).collect();
        let mut picks = with_uid.clone();
        picks.shuffle(&mut rng);
        for pair in picks.chunks_exact(2).take(spec.shared_uid_pairs) {
            let uid = voters[pair[0]].uid.clone();
            voters[pair[1]].uid = uid.clone();
            citizens[pair[1]].uid = uid.expect("has uid");
        }
        Self { seed, spec, voters, citizens }
    }

    pub fn citizen(&self, subject: SubjectId) -> &Citizen {
        &self.citizens[subject as usize]
    }
}
