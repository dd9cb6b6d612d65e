//! Commitment-consistent proof of a multi-column re-encryption shuffle.
//!
//! One server permutes every column with the same π and re-encrypts:
//! `output[col][i] = ReEnc(input[col][π(i)])`. The proof commits to the
//! permutation matrix column by column (c_{π(i)} = g^{r_{π(i)}}·h_i), builds a
//! commitment chain ĉ_i = g^{r̂_i}·ĉ_{i−1}^{u'_i} over the permuted challenges
//! u'_i = u_{π(i)}, and proves in one sigma protocol that the committed matrix
//! is a permutation and that every column's outputs are re-encryptions of the
//! challenge-weighted inputs. The responses s'_i are shared by all columns,
//! which binds a single π across them.

use curve25519_dalek::ristretto::RistrettoPoint;
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::{IsIdentity, VartimeMultiscalarMul};
use rand::seq::SliceRandom;
use rand::{CryptoRng, RngCore};

use super::generators::CommitmentKey;
use crate::crypto::group::random_scalar;
use crate::crypto::transcript::{indexed_scalar, Transcript, TAG_SHUFFLE};
use crate::crypto::{reencrypt, Ciphertext, CryptoError, Element, JointPublicKey};
use crate::encoding::{Decode, DecodeError, Encode, Reader, Writer};

pub type Columns = Vec<Vec<Ciphertext>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepProof {
    pub commitments: Vec<Element>,
    pub chain: Vec<Element>,
    pub t1: Element,
    pub t2: Element,
    pub t3: Element,
    pub t4: Vec<[Element; 2]>,
    pub t_hat: Vec<Element>,
    pub s1: Scalar,
    pub s2: Scalar,
    pub s3: Scalar,
    pub s4: Vec<Scalar>,
    pub s_hat: Vec<Scalar>,
    pub s_prime: Vec<Scalar>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShuffleStep {
    pub server: u32,
    pub output: Columns,
    pub proof: StepProof,
}

/// The per-server steps in order; the last step's output is the final output.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ShuffleProof {
    pub steps: Vec<ShuffleStep>,
}

impl ShuffleProof {
    pub fn output(&self) -> Option<&Columns> {
        self.steps.last().map(|s| &s.output)
    }
}

/// Uniform permutation by Fisher–Yates.
pub fn random_permutation<R: RngCore>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&i| i < seen.len() && !std::mem::replace(&mut seen[i], true))
}

/// Returns n, or None for empty or ragged columns.
pub fn column_len(columns: &Columns) -> Option<usize> {
    let n = columns.first()?.len();
    (n > 0 && columns.iter().all(|c| c.len() == n)).then_some(n)
}

fn statement_digest(
    pk: &JointPublicKey,
    ck: &CommitmentKey,
    server: u32,
    input: &Columns,
    output: &Columns,
    commitments: &[Element],
) -> [u8; 64] {
    let mut t = Transcript::new(TAG_SHUFFLE);
    t.append(pk);
    t.append(ck.seed.as_str());
    t.append(&server);
    t.append(input);
    t.append(output);
    t.append(&commitments.to_vec());
    t.digest()
}

fn challenges(digest: &[u8; 64], n: usize) -> Vec<Scalar> {
    (0..n as u64).map(|j| indexed_scalar(digest, b"u", j)).collect()
}

fn main_challenge(digest: &[u8; 64], p: &StepProof) -> Scalar {
    let mut t = Transcript::new(TAG_SHUFFLE);
    t.append_raw(digest);
    t.append(&p.chain);
    t.append(&p.t1);
    t.append(&p.t2);
    t.append(&p.t3);
    for [a, b] in &p.t4 {
        t.append(a);
        t.append(b);
    }
    t.append(&p.t_hat);
    t.challenge()
}

fn chain_weights(digest: &[u8; 64], c: &Scalar, n: usize) -> Vec<Scalar> {
    let mut seed = [0u8; 64];
    seed[..32].copy_from_slice(c.as_bytes());
    seed[32..].copy_from_slice(&digest[..32]);
    (0..n as u64)
        .map(|i| {
            let mut b = indexed_scalar(&seed, b"w", i).to_bytes();
            b[16..].fill(0);
            Scalar::from_bytes_mod_order(b)
        })
        .collect()
}

fn el(p: RistrettoPoint) -> Element {
    Element::from_point(p)
}

/// Shuffles and re-encrypts every column under permutation `perm`.
pub fn shuffle_step<R: RngCore + CryptoRng>(
    pk: &JointPublicKey,
    ck: &CommitmentKey,
    server: u32,
    input: &Columns,
    perm: &[usize],
    rng: &mut R,
) -> Result<ShuffleStep, CryptoError> {
    let n = column_len(input).ok_or_else(|| CryptoError::Parameter("columns must be nonempty and of equal length".into()))?;
    if perm.len() != n || !is_permutation(perm) {
        return Err(CryptoError::Parameter(format!("not a permutation of {n} positions")));
    }
    if ck.len() < n {
        return Err(CryptoError::Parameter(format!("commitment key covers {} positions, need {n}", ck.len())));
    }
    let g = |s: &Scalar| JointPublicKey::g_mul(s);
    let cols = input.len();

    // Re-encryption.
    let rho: Vec<Vec<Scalar>> = (0..cols).map(|_| (0..n).map(|_| random_scalar(rng)).collect()).collect();
    let output: Columns = (0..cols)
        .map(|col| (0..n).map(|i| reencrypt(pk, &input[col][perm[i]], &rho[col][i])).collect())
        .collect();

    // Permutation commitment, indexed by input position.
    let r: Vec<Scalar> = (0..n).map(|_| random_scalar(rng)).collect();
    let mut commitments = vec![Element::identity(); n];
    for i in 0..n {
        let j = perm[i];
        commitments[j] = el(g(&r[j]) + ck.hs[i]);
    }

    let digest = statement_digest(pk, ck, server, input, &output, &commitments);
    let u = challenges(&digest, n);
    let u_perm: Vec<Scalar> = (0..n).map(|i| u[perm[i]]).collect();

    // Commitment chain.
    let r_hat: Vec<Scalar> = (0..n).map(|_| random_scalar(rng)).collect();
    let mut chain_pts: Vec<RistrettoPoint> = Vec::with_capacity(n);
    let mut prev = *ck.h0.point();
    for i in 0..n {
        let next = g(&r_hat[i]) + prev * u_perm[i];
        chain_pts.push(next);
        prev = next;
    }

    // Aggregated witnesses.
    let r_bar: Scalar = r.iter().sum();
    let mut v = vec![Scalar::ONE; n];
    for i in (1..n).rev() {
        v[i - 1] = u_perm[i] * v[i];
    }
    let r_hat_sum: Scalar = r_hat.iter().zip(&v).map(|(a, b)| a * b).sum();
    let r_tilde: Scalar = r.iter().zip(&u).map(|(a, b)| a * b).sum();
    let r_prime: Vec<Scalar> =
        rho.iter().map(|col| col.iter().zip(&u_perm).map(|(a, b)| a * b).sum()).collect();

    // Commitments of the sigma protocol.
    let w1 = random_scalar(rng);
    let w2 = random_scalar(rng);
    let w3 = random_scalar(rng);
    let w4: Vec<Scalar> = (0..cols).map(|_| random_scalar(rng)).collect();
    let w_hat: Vec<Scalar> = (0..n).map(|_| random_scalar(rng)).collect();
    let w_prime: Vec<Scalar> = (0..n).map(|_| random_scalar(rng)).collect();

    let t1 = el(g(&w1));
    let t2 = el(g(&w2));
    let t3 = el(g(&w3) + RistrettoPoint::vartime_multiscalar_mul(&w_prime, &ck.hs[..n]));
    let t4: Vec<[Element; 2]> = (0..cols)
        .map(|col| {
            let c1s = output[col].iter().map(|c| *c.c1.point());
            let c2s = output[col].iter().map(|c| *c.c2.point());
            [
                el(RistrettoPoint::vartime_multiscalar_mul(&w_prime, c1s) - g(&w4[col])),
                el(RistrettoPoint::vartime_multiscalar_mul(&w_prime, c2s) - pk.mul(&w4[col])),
            ]
        })
        .collect();
    let t_hat: Vec<Element> = (0..n)
        .map(|i| {
            let prev = if i == 0 { *ck.h0.point() } else { chain_pts[i - 1] };
            el(g(&w_hat[i]) + prev * w_prime[i])
        })
        .collect();

    let mut proof = StepProof {
        commitments,
        chain: chain_pts.into_iter().map(el).collect(),
        t1,
        t2,
        t3,
        t4,
        t_hat,
        s1: Scalar::ZERO,
        s2: Scalar::ZERO,
        s3: Scalar::ZERO,
        s4: vec![],
        s_hat: vec![],
        s_prime: vec![],
    };
    let c = main_challenge(&digest, &proof);
    proof.s1 = w1 + c * r_bar;
    proof.s2 = w2 + c * r_hat_sum;
    proof.s3 = w3 + c * r_tilde;
    proof.s4 = w4.iter().zip(&r_prime).map(|(w, r)| w + c * r).collect();
    proof.s_hat = w_hat.iter().zip(&r_hat).map(|(w, r)| w + c * r).collect();
    proof.s_prime = w_prime.iter().zip(&u_perm).map(|(w, u)| w + c * u).collect();

    Ok(ShuffleStep { server, output, proof })
}

/// Verifies one step against its input columns. Never panics.
pub fn verify_step(pk: &JointPublicKey, ck: &CommitmentKey, input: &Columns, step: &ShuffleStep) -> bool {
    let Some(n) = column_len(input) else { return false };
    let cols = input.len();
    let p = &step.proof;
    let shapes_ok = step.output.len() == cols
        && step.output.iter().all(|c| c.len() == n)
        && p.commitments.len() == n
        && p.chain.len() == n
        && p.t_hat.len() == n
        && p.s_hat.len() == n
        && p.s_prime.len() == n
        && p.t4.len() == cols
        && p.s4.len() == cols
        && ck.len() >= n;
    if !shapes_ok {
        return false;
    }

    let digest = statement_digest(pk, ck, step.server, input, &step.output, &p.commitments);
    let u = challenges(&digest, n);
    let c = main_challenge(&digest, p);
    let g = *crate::crypto::Element::generator().point();
    let cu: Vec<Scalar> = u.iter().map(|x| c * x).collect();
    let commit_pts: Vec<RistrettoPoint> = p.commitments.iter().map(|e| *e.point()).collect();

    // t1 = g^{s1} · (Π c_j / Π h_j)^{−c}
    let sum_c: RistrettoPoint = commit_pts.iter().sum();
    let sum_h: RistrettoPoint = ck.hs[..n].iter().sum();
    let t1 = RistrettoPoint::vartime_multiscalar_mul([p.s1, -c, c], [g, sum_c, sum_h]);
    if t1 != *p.t1.point() {
        return false;
    }

    // t2 = g^{s2} · (ĉ_n / h0^{Π u})^{−c}
    let u_prod: Scalar = u.iter().product();
    let last = *p.chain[n - 1].point();
    let t2 = RistrettoPoint::vartime_multiscalar_mul([p.s2, -c, c * u_prod], [g, last, *ck.h0.point()]);
    if t2 != *p.t2.point() {
        return false;
    }

    // t3 = g^{s3} · Π h_i^{s'_i} · (Π c_j^{u_j})^{−c}
    let t3 = RistrettoPoint::vartime_multiscalar_mul(
        std::iter::once(p.s3).chain(p.s_prime.iter().copied()).chain(cu.iter().map(|x| -x)),
        std::iter::once(g).chain(ck.hs[..n].iter().copied()).chain(commit_pts.iter().copied()),
    );
    if t3 != *p.t3.point() {
        return false;
    }

    // Per column: t4 = (g^{−s4}·Π a'_i^{s'_i}·ã^{−c}, pk^{−s4}·Π b'_i^{s'_i}·b̃^{−c})
    let pk_pt = *pk.element().point();
    for col in 0..cols {
        for (comp, base) in [(0usize, g), (1usize, pk_pt)] {
            let pick = |ct: &Ciphertext| if comp == 0 { *ct.c1.point() } else { *ct.c2.point() };
            let lhs = RistrettoPoint::vartime_multiscalar_mul(
                std::iter::once(-p.s4[col]).chain(p.s_prime.iter().copied()).chain(cu.iter().map(|x| -x)),
                std::iter::once(base).chain(step.output[col].iter().map(pick)).chain(input[col].iter().map(pick)),
            );
            if lhs != *p.t4[col][comp].point() {
                return false;
            }
        }
    }

    // Chain links t̂_i = g^{ŝ_i}·ĉ_{i−1}^{s'_i}·ĉ_i^{−c}, checked as one
    // random linear combination with hash-derived 128-bit weights.
    let w = chain_weights(&digest, &c, n);
    let mut scalars = Vec::with_capacity(3 * n + 2);
    let mut points = Vec::with_capacity(3 * n + 2);
    scalars.push(w.iter().zip(&p.s_hat).map(|(a, b)| a * b).sum());
    points.push(g);
    scalars.push(w[0] * p.s_prime[0]);
    points.push(*ck.h0.point());
    for i in 0..n {
        let next = if i + 1 < n { w[i + 1] * p.s_prime[i + 1] } else { Scalar::ZERO };
        scalars.push(next - c * w[i]);
        points.push(*p.chain[i].point());
        scalars.push(-w[i]);
        points.push(*p.t_hat[i].point());
    }
    RistrettoPoint::vartime_multiscalar_mul(scalars, points).is_identity()
}

/// Verifies the whole chain: one step per server in index order, each step
/// consuming the previous step's output.
pub fn verify_shuffle(pk: &JointPublicKey, ck: &CommitmentKey, input: &Columns, proof: &ShuffleProof) -> bool {
    if proof.steps.len() != pk.kappa() {
        return false;
    }
    let mut current = input;
    for (k, step) in proof.steps.iter().enumerate() {
        if step.server as usize != k + 1 || !verify_step(pk, ck, current, step) {
            return false;
        }
        current = &step.output;
    }
    true
}

impl Encode for StepProof {
    fn encode(&self, w: &mut Writer) {
        w.seq(&self.commitments);
        w.seq(&self.chain);
        w.put(&self.t1);
        w.put(&self.t2);
        w.put(&self.t3);
        w.u32(self.t4.len() as u32);
        for [a, b] in &self.t4 {
            w.put(a);
            w.put(b);
        }
        w.seq(&self.t_hat);
        w.put(&self.s1);
        w.put(&self.s2);
        w.put(&self.s3);
        w.seq(&self.s4);
        w.seq(&self.s_hat);
        w.seq(&self.s_prime);
    }
}

impl Decode for StepProof {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let commitments = r.seq()?;
        let chain = r.seq()?;
        let t1 = r.get()?;
        let t2 = r.get()?;
        let t3 = r.get()?;
        let len = r.u32()? as usize;
        let mut t4 = Vec::with_capacity(len.min(r.remaining() / 64));
        for _ in 0..len {
            t4.push([r.get()?, r.get()?]);
        }
        Ok(Self {
            commitments,
            chain,
            t1,
            t2,
            t3,
            t4,
            t_hat: r.seq()?,
            s1: r.get()?,
            s2: r.get()?,
            s3: r.get()?,
            s4: r.seq()?,
            s_hat: r.seq()?,
            s_prime: r.seq()?,
        })
    }
}

impl Encode for ShuffleStep {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.server);
        w.put(&self.output);
        w.put(&self.proof);
    }
}

impl Decode for ShuffleStep {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { server: r.u32()?, output: r.get()?, proof: r.get()? })
    }
}

impl Encode for ShuffleProof {
    fn encode(&self, w: &mut Writer) {
        w.seq(&self.steps);
    }
}

impl Decode for ShuffleProof {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self { steps: r.seq()? })
    }
}
