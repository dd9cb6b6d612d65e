//! H_α: a non-interactive random subset seeded by the board digest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha512};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    /// Selected candidate indices, ascending.
    pub indices: Vec<usize>,
    /// Set when there were fewer than α candidates and all were taken.
    pub undersized: bool,
}

/// Deterministically selects `alpha` of `candidates`.
///
/// The tape is ChaCha20 keyed by SHA-512 over (digest, section tag, α,
/// predicate id); a partial Fisher–Yates pass over the candidate list keeps
/// the first α survivors.
pub fn select_h_alpha(digest: &[u8; 64], section: &str, alpha: usize, candidates: &[usize], predicate: &str) -> Sample {
    if candidates.len() <= alpha {
        let mut indices = candidates.to_vec();
        indices.sort_unstable();
        return Sample { indices, undersized: candidates.len() < alpha };
    }
    let mut h = Sha512::new();
    h.update(b"eroll/h-alpha/v1");
    h.update(digest);
    for part in [section.as_bytes(), predicate.as_bytes()] {
        h.update((part.len() as u32).to_be_bytes());
        h.update(part);
    }
    h.update((alpha as u64).to_be_bytes());
    let key: [u8; 64] = h.finalize().into();
    let mut rng = ChaCha20Rng::from_seed(key[..32].try_into().expect("32 bytes"));

    let mut pool = candidates.to_vec();
    for i in 0..alpha {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(alpha);
    pool.sort_unstable();
    Sample { indices: pool, undersized: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn full_and_undersized_sets() {
        let cands = [4, 1, 9];
        let s = select_h_alpha(&[0; 64], "err", 3, &cands, "all");
        assert_eq!(s, Sample { indices: vec![1, 4, 9], undersized: false });
        let s = select_h_alpha(&[0; 64], "err", 5, &cands, "all");
        assert_eq!(s.indices, vec![1, 4, 9]);
        assert!(s.undersized);
    }

    #[test]
    fn idempotent_and_sensitive_to_inputs() {
        let cands: Vec<usize> = (0..100).collect();
        let d = [7u8; 64];
        let a = select_h_alpha(&d, "err", 10, &cands, "all");
        assert_eq!(a, select_h_alpha(&d, "err", 10, &cands, "all"));
        assert_eq!(a.indices.len(), 10);
        assert!(a.indices.windows(2).all(|w| w[0] < w[1]));
        assert_ne!(a, select_h_alpha(&d, "er", 10, &cands, "all"));
        assert_ne!(a, select_h_alpha(&d, "err", 10, &cands, "resp=1"));
        let mut d2 = d;
        d2[63] ^= 1;
        assert_ne!(a, select_h_alpha(&d2, "err", 10, &cands, "all"));
    }

    #[test]
    fn inclusion_frequency_is_uniform() {
        // n = 100, α = 10 over 1000 random digests: each index is expected
        // in 10% of samples.
        let cands: Vec<usize> = (0..100).collect();
        let mut counts = [0u32; 100];
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let mut d = [0u8; 64];
            rng.fill_bytes(&mut d);
            for i in select_h_alpha(&d, "er", 10, &cands, "resp=1").indices {
                counts[i] += 1;
            }
        }
        for (i, &c) in counts.iter().enumerate() {
            let f = c as f64 / 1000.0;
            assert!((0.07..=0.13).contains(&f), "index {i} frequency {f}");
        }
        // Pearson statistic against 99 degrees of freedom; the 0.999
        // quantile is about 148.
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 100.0).powi(2) / 100.0).sum();
        assert!(chi2 < 148.0, "chi2 {chi2}");
    }
}
