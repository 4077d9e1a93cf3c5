//! Analytic bounds on a cheating Alice: the linking-test envelope, the
//! probabilistic-commitment envelope and the exact hypergeometric sum.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use statrs::function::factorial::ln_binomial;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("M = {0} is odd; the sum is only defined for even M")]
    OddM(u64),
    #[error("M must be at least 1")]
    ZeroM,
    #[error("gamma = {0} outside [0, 1/2]")]
    GammaOutOfRange(f64),
    #[error("{name} = {value} outside [0, 1]")]
    FractionOutOfRange { name: &'static str, value: f64 },
    #[error("overlap r = {r} exceeds {max}")]
    OverlapOutOfRange { r: u64, max: u64 },
}

/// Fractions of each batch committing the wrong bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyProfile {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl StrategyProfile {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self, BoundsError> {
        check_fraction("gamma1", gamma1)?;
        check_fraction("gamma2", gamma2)?;
        Ok(StrategyProfile { gamma1, gamma2 })
    }

    /// From counts of wrong-bit pairs in an `M`-pair and a `2M`-pair batch.
    pub fn from_counts(m: u64, bad_first: u64, bad_second: u64) -> Result<Self, BoundsError> {
        if m == 0 {
            return Err(BoundsError::ZeroM);
        }
        Self::new(bad_first as f64 / m as f64, bad_second as f64 / (2 * m) as f64)
    }

    /// From the fractions `y`, `ybar` of pairs probabilistically committing
    /// `b` and `b-bar` in each batch; the remainder counts against neither.
    pub fn from_probabilistic(y1: f64, ybar1: f64, y2: f64, ybar2: f64) -> Result<Self, BoundsError> {
        for (name, v) in [("y1", y1), ("ybar1", ybar1), ("y2", y2), ("ybar2", ybar2)] {
            check_fraction(name, v)?;
        }
        check_fraction("y1 + ybar1", y1 + ybar1)?;
        check_fraction("y2 + ybar2", y2 + ybar2)?;
        Self::new(ybar1, ybar2)
    }
}

fn check_fraction(name: &'static str, value: f64) -> Result<(), BoundsError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(BoundsError::FractionOutOfRange { name, value })
    }
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `C(F, r) C(2M - F, M - r) / C(2M, M)`: the chance that an `M`-subset of
/// `2M` pairs, `F` of them marked, contains exactly `r` marked ones.
pub fn overlap_pmf(m: u64, marked: u64, r: u64) -> BigRational {
    ratio(
        binomial(marked, r) * binomial(2 * m - marked, m - r.min(m)),
        binomial(2 * m, m),
    )
}

/// The even-`M` pmf with `M/2` marked pairs.
pub fn hypergeometric_overlap_pmf(m: u64, r: u64) -> Result<BigRational, BoundsError> {
    check_even(m)?;
    if r > m / 2 {
        return Err(BoundsError::OverlapOutOfRange { r, max: m / 2 });
    }
    Ok(overlap_pmf(m, m / 2, r))
}

fn check_even(m: u64) -> Result<(), BoundsError> {
    if m == 0 {
        Err(BoundsError::ZeroM)
    } else if m % 2 == 1 {
        Err(BoundsError::OddM(m))
    } else {
        Ok(())
    }
}

fn weighted_overlap_sum(m: u64, marked: u64, num: u64, den: u64) -> BigRational {
    let w = BigRational::new(BigInt::from(num), BigInt::from(den));
    let mut pow = BigRational::one();
    let mut acc = BigRational::zero();
    for r in 0..=marked.min(m) {
        acc += &pow * overlap_pmf(m, marked, r);
        pow *= &w;
    }
    acc
}

/// `sum_r (2/3)^r C(M/2, r) C(3M/2, M - r) / C(2M, M)`, exactly.
pub fn cheat_success_bound(m: u64) -> Result<BigRational, BoundsError> {
    check_even(m)?;
    Ok(weighted_overlap_sum(m, m / 2, 2, 3))
}

pub fn cheat_success_bound_f64(m: u64) -> Result<f64, BoundsError> {
    Ok(cheat_success_bound(m)?.to_f64().unwrap_or(0.0))
}

/// Natural log of the cheat bound through log-gamma binomials.
pub fn cheat_success_bound_ln(m: u64) -> Result<f64, BoundsError> {
    check_even(m)?;
    let h = m / 2;
    let norm = ln_binomial(2 * m, m);
    let terms: Vec<f64> = (0..=h)
        .map(|r| r as f64 * (2.0f64 / 3.0).ln() + ln_binomial(h, r) + ln_binomial(3 * h, m - r) - norm)
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln())
}

/// Wrong-bit pairs placed in the second batch by the optimal flip strategy.
pub fn flip_count(m: u64) -> u64 {
    (2 * m).saturating_sub(1) / 4 + 1
}

/// Exact escape probability of the flip strategy when commitments are
/// perfectly binding: each mismatched couple survives its spot check with
/// probability 1/2.
pub fn classical_escape_oracle(m: u64) -> Result<BigRational, BoundsError> {
    if m == 0 {
        return Err(BoundsError::ZeroM);
    }
    Ok(weighted_overlap_sum(m, flip_count(m), 1, 2))
}

pub fn classical_escape_oracle_f64(m: u64) -> Result<f64, BoundsError> {
    Ok(classical_escape_oracle(m)?.to_f64().unwrap_or(0.0))
}

/// `(1/2)^{M (g1 (1 - g2) + g2 (1 - g1))}`.
pub fn lemma1_pass_bound(m: u64, profile: StrategyProfile) -> f64 {
    let StrategyProfile { gamma1: g1, gamma2: g2 } = profile;
    0.5f64.powf(m as f64 * (g1 * (1.0 - g2) + g2 * (1.0 - g1)))
}

/// `(2/3)^{M gamma / 2}`. `gamma = 1/2` is accepted as the limiting case.
pub fn lemma2_pass_bound(m: u64, gamma: f64) -> Result<f64, BoundsError> {
    if !(0.0..=0.5).contains(&gamma) {
        return Err(BoundsError::GammaOutOfRange(gamma));
    }
    Ok((2.0f64 / 3.0).powf(m as f64 * gamma / 2.0))
}

/// `gamma = floor((M - 1) / 2) / M`.
pub fn default_gamma(m: u64) -> Result<f64, BoundsError> {
    if m == 0 {
        return Err(BoundsError::ZeroM);
    }
    Ok(((m - 1) / 2) as f64 / m as f64)
}

/// Linking-test bound at the default `gamma_M`.
pub fn lemma2_default(m: u64) -> Result<f64, BoundsError> {
    lemma2_pass_bound(m, default_gamma(m)?)
}

/// `(2/3)^{M/4}`.
pub fn remark_approximation(m: u64) -> f64 {
    (2.0f64 / 3.0).powf(m as f64 / 4.0)
}
