//! Non-detection probability of sampled audits and the soundness/privacy
//! bounds built from it.
//!
//! `hyp(n, α, f, d)` is the probability that sampling α of n items without
//! replacement, f of them bad and each bad item caught with probability d
//! once sampled, catches nothing:
//!
//! ```text
//! Hyp(n, α, f, d) = Σ_k C(f,k)·C(n−f,α−k)/C(n,α) · (1−d)^k
//! ```
//!
//! Evaluation walks the term ratio in log space, so n up to 10⁸ is fine.
//! [`hyp_exact`] is a big-rational path used as a cross-check.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundsError {
    #[error("parameter error: {0}")]
    Parameter(String),
}

fn param(msg: String) -> BoundsError {
    BoundsError::Parameter(msg)
}

fn check(n: u64, alpha: u64, f: f64, d: f64) -> Result<(), BoundsError> {
    if alpha > n {
        return Err(param(format!("sample size {alpha} exceeds population {n}")));
    }
    if !(f.is_finite() && f >= 0.0 && f <= n as f64) {
        return Err(param(format!("special count {f} outside [0, {n}]")));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(param(format!("detection probability {d} outside [0, 1]")));
    }
    Ok(())
}

/// ln C(n, k) by a product over the shorter side.
fn ln_binom(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

/// Running Σ sign·exp(l) kept as scale·exp(shift).
struct SignedLogSum {
    shift: f64,
    scaled: f64,
    largest: f64,
}

impl SignedLogSum {
    fn new() -> Self {
        Self { shift: f64::NEG_INFINITY, scaled: 0.0, largest: f64::NEG_INFINITY }
    }

    fn add(&mut self, ln_mag: f64, negative: bool) {
        if ln_mag == f64::NEG_INFINITY {
            return;
        }
        self.largest = self.largest.max(ln_mag);
        if ln_mag > self.shift {
            self.scaled *= (self.shift - ln_mag).exp();
            self.shift = ln_mag;
        }
        let v = (ln_mag - self.shift).exp();
        self.scaled += if negative { -v } else { v };
    }

    fn value(&self) -> f64 {
        if self.shift == f64::NEG_INFINITY {
            0.0
        } else {
            self.scaled * self.shift.exp()
        }
    }

    /// False once cancellation has eaten most of the f64 mantissa.
    fn well_conditioned(&self) -> bool {
        self.scaled > 0.0 && self.scaled.ln() + self.shift > self.largest - 25.0
    }
}

/// Hyp(n, α, f, d) for integer f.
pub fn hyp(n: u64, alpha: u64, f: u64, d: f64) -> Result<f64, BoundsError> {
    check(n, alpha, f as f64, d)?;
    if f == 0 || alpha == 0 || d == 0.0 {
        return Ok(1.0);
    }
    let good = n - f;
    let k_min = alpha.saturating_sub(good);
    let k_max = if d == 1.0 { k_min } else { alpha.min(f) };
    if d == 1.0 && k_min > 0 {
        return Ok(0.0);
    }
    let ln_first = if k_min == 0 {
        (0..alpha).map(|i| (-(f as f64) / (n - i) as f64).ln_1p()).sum::<f64>()
    } else {
        ln_binom(f, k_min) + ln_binom(good, alpha - k_min) - ln_binom(n, alpha) + k_min as f64 * (1.0 - d).ln()
    };
    let ln_miss = (1.0 - d).ln();
    let mut sum = SignedLogSum::new();
    let mut ln_term = ln_first;
    for k in k_min..=k_max {
        sum.add(ln_term, false);
        if k == k_max {
            break;
        }
        ln_term += ((f - k) as f64).ln() - ((k + 1) as f64).ln() + ((alpha - k) as f64).ln()
            - ((good + k + 1 - alpha) as f64).ln()
            + ln_miss;
    }
    Ok(sum.value().clamp(0.0, 1.0))
}

/// Hyp at a real-valued special count through generalized binomials.
///
/// Defined only while α ≤ n − f, where every denominator stays positive.
/// Terms past k = f alternate in sign; when they cancel beyond f64 precision
/// the value is not reported. Returns `None` in both cases.
pub fn hyp_real(n: u64, alpha: u64, f: f64, d: f64) -> Result<Option<f64>, BoundsError> {
    check(n, alpha, f, d)?;
    if f.fract() == 0.0 {
        return hyp(n, alpha, f as u64, d).map(Some);
    }
    let good = n as f64 - f;
    if alpha as f64 > good {
        return Ok(None);
    }
    if alpha == 0 || d == 0.0 {
        return Ok(Some(1.0));
    }
    let mut ln_term: f64 = (0..alpha).map(|i| (-f / (n - i) as f64).ln_1p()).sum();
    if d == 1.0 {
        return Ok(Some(ln_term.exp().clamp(0.0, 1.0)));
    }
    let ln_miss = (1.0 - d).ln();
    let mut negative = false;
    let mut sum = SignedLogSum::new();
    for k in 0..=alpha {
        sum.add(ln_term, negative);
        if k == alpha {
            break;
        }
        let kf = k as f64;
        let lead = f - kf;
        negative ^= lead < 0.0;
        ln_term += lead.abs().ln() - (kf + 1.0).ln() + ((alpha - k) as f64).ln() - (good - alpha as f64 + kf + 1.0).ln()
            + ln_miss;
    }
    Ok(sum.well_conditioned().then(|| sum.value().clamp(0.0, 1.0)))
}

fn binom_big(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Exact rational Hyp. Cost grows with n·α; meant for n ≤ 10³.
pub fn hyp_exact(n: u64, alpha: u64, f: u64, d: &BigRational) -> Result<BigRational, BoundsError> {
    let df = d.to_f64().unwrap_or(f64::NAN);
    check(n, alpha, f as f64, df)?;
    let miss = BigRational::one() - d;
    let total = binom_big(n, alpha);
    let mut acc = BigRational::zero();
    let mut miss_pow = BigRational::one();
    for k in 0..=alpha.min(f) {
        if alpha - k <= n - f {
            let ways = binom_big(f, k) * binom_big(n - f, alpha - k);
            acc += BigRational::from_integer(ways) * &miss_pow;
        }
        miss_pow *= &miss;
    }
    Ok(acc / BigRational::from_integer(total))
}

/// Monte-Carlo estimate of Hyp and its standard error. Items `0..f` are
/// the special ones.
pub fn hyp_monte_carlo<R: Rng>(n: u64, alpha: u64, f: u64, d: f64, draws: u64, rng: &mut R) -> (f64, f64) {
    let mut missed = 0u64;
    for _ in 0..draws {
        let picked = sample(rng, n as usize, alpha as usize);
        let caught = picked.iter().any(|i| (i as u64) < f && rng.gen_bool(d));
        if !caught {
            missed += 1;
        }
    }
    let p = missed as f64 / draws as f64;
    (p, (p * (1.0 - p) / draws as f64).sqrt())
}

/// Hyp evaluated at f/2 under the three conventions for odd f. Hyp falls
/// as f grows, so the floor value is the conservative one whenever the real
/// value is available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfEval {
    pub real: Option<f64>,
    pub ceil: f64,
    pub floor: f64,
    /// Largest of the three, used in the bound.
    pub conservative: f64,
}

pub fn hyp_half(n: u64, alpha: u64, f: u64, d: f64) -> Result<HalfEval, BoundsError> {
    let ceil = hyp(n, alpha, f.div_ceil(2), d)?;
    let floor = hyp(n, alpha, f / 2, d)?;
    let real = hyp_real(n, alpha, f as f64 / 2.0, d)?;
    let conservative = real.unwrap_or(0.0).max(ceil).max(floor);
    Ok(HalfEval { real, ceil, floor, conservative })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundnessParams {
    /// Honest eligible voters casting.
    pub n_d: u64,
    /// Receipts audited.
    pub alpha_d: u64,
    /// Voters denied.
    pub f_d: u64,
    /// Registered eligible voters.
    pub big_n_s: u64,
    /// Eligible voters casting.
    pub n_s: u64,
    /// ERR/ER rows audited.
    pub alpha_s: u64,
    /// Votes stuffed.
    pub f_s: u64,
}

impl SoundnessParams {
    /// The large-election regime: n honest casting voters, a winning margin
    /// attributed entirely to fraud (so f = margin/2 · n on either side), and
    /// the largest registered population for which more than half cast.
    pub fn regime(n: u64, alpha: u64, margin: f64) -> Result<Self, BoundsError> {
        if !(margin > 0.0 && margin < 1.0) || n == 0 {
            return Err(param(format!("margin {margin} must lie in (0, 1) and n must be positive")));
        }
        let f = ((margin / 2.0 * n as f64).floor() as u64).max(1);
        Ok(Self { n_d: n, alpha_d: alpha, f_d: f, big_n_s: 2 * n - 1, n_s: n, alpha_s: alpha, f_s: f })
    }

    fn validate(&self) -> Result<(), BoundsError> {
        if self.f_d > self.n_d || self.alpha_d > self.n_d {
            return Err(param(format!(
                "need f_d ≤ n_d and α_d ≤ n_d, got f_d={} α_d={} n_d={}",
                self.f_d, self.alpha_d, self.n_d
            )));
        }
        if self.alpha_s > self.big_n_s + self.f_s {
            return Err(param(format!("α_s={} exceeds N_s+f_s={}", self.alpha_s, self.big_n_s + self.f_s)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonReport {
    pub params: SoundnessParams,
    /// Hyp(n_d, α_d, f_d/2, 1/3).
    pub denial: HalfEval,
    /// Hyp(N_s+f_s, α_s, f_s/2, 1).
    pub stuffing: HalfEval,
    /// 2·max of the squares, before clamping.
    pub raw: f64,
    pub value: f64,
    /// Set when the raw expression exceeds 1 and the bound is vacuous.
    pub degenerate: bool,
}

pub fn epsilon(p: &SoundnessParams) -> Result<EpsilonReport, BoundsError> {
    p.validate()?;
    let denial = hyp_half(p.n_d, p.alpha_d, p.f_d, 1.0 / 3.0)?;
    let stuffing = hyp_half(p.big_n_s + p.f_s, p.alpha_s, p.f_s, 1.0)?;
    let raw = 2.0 * denial.conservative.powi(2).max(stuffing.conservative.powi(2));
    Ok(EpsilonReport { params: *p, denial, stuffing, raw, value: raw.clamp(0.0, 1.0), degenerate: raw > 1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub n: u64,
    pub alpha: u64,
    /// Profiling, forced-abstention and unlinkability terms.
    pub terms: [f64; 3],
    pub value: f64,
}

pub fn delta(n: u64, alpha: u64) -> Result<DeltaReport, BoundsError> {
    if n == 0 || alpha > n {
        return Err(param(format!("need 0 ≤ α ≤ n and n ≥ 1, got n={n} α={alpha}")));
    }
    let h1 = hyp(n, alpha, 1, 1.0)?;
    let h2 = hyp(n, alpha, 2.min(n), 1.0)?;
    let frac = alpha as f64 / n as f64;
    let terms = [
        (1.0 - h1 * h1 * (1.0 - frac).powi(2)).clamp(0.0, 1.0),
        (1.0 - h2 * (1.0 - 2.0 * frac)).clamp(0.0, 1.0),
        (1.0 - h1 * h1).clamp(0.0, 1.0),
    ];
    let value = terms.iter().copied().fold(0.0, f64::max);
    Ok(DeltaReport { n, alpha, terms, value })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub n: u64,
    pub margin: f64,
    pub target: f64,
    pub f: u64,
    /// Smallest sufficient α, or `None` when even α = n misses the target.
    pub alpha: Option<u64>,
    pub epsilon: f64,
}

fn epsilon_at(n: u64, alpha: u64, margin: f64) -> Result<f64, BoundsError> {
    Ok(epsilon(&SoundnessParams::regime(n, alpha, margin)?)?.value)
}

/// Smallest α with ε ≤ target in the [`SoundnessParams::regime`] setting,
/// by binary search (ε is nonincreasing in α).
pub fn plan(margin: f64, n: u64, target: f64) -> Result<PlanReport, BoundsError> {
    if !(0.0..=1.0).contains(&target) {
        return Err(param(format!("target {target} outside [0, 1]")));
    }
    let f = SoundnessParams::regime(n, 0, margin)?.f_d;
    let at_full = epsilon_at(n, n, margin)?;
    let base = PlanReport { n, margin, target, f, alpha: None, epsilon: at_full };
    if at_full > target {
        return Ok(base);
    }
    let (mut lo, mut hi) = (0u64, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if epsilon_at(n, mid, margin)? <= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(PlanReport { alpha: Some(lo), epsilon: epsilon_at(n, lo, margin)?, ..base })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRow {
    pub n: u64,
    pub alpha: u64,
    pub margin: f64,
    pub epsilon: EpsilonReport,
    pub delta: DeltaReport,
}

pub fn table(ns: &[u64], alphas: &[u64], margins: &[f64]) -> Result<Vec<TableRow>, BoundsError> {
    let mut rows = vec![];
    for &n in ns {
        for &alpha in alphas.iter().filter(|&&a| a <= n) {
            for &margin in margins {
                rows.push(TableRow {
                    n,
                    alpha,
                    margin,
                    epsilon: epsilon(&SoundnessParams::regime(n, alpha, margin)?)?,
                    delta: delta(n, alpha)?,
                });
            }
        }
    }
    Ok(rows)
}
