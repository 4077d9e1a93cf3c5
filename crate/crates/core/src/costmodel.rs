//! Bits per round for each site, the round time they imply at a given link
//! rate, and the site separation that round time demands.

use crate::protocol::{expected_bits, MsgKind, Transcript};
use crate::spacetime::{RegionId, Site};
use num_bigint::BigUint;
use num_traits::One;
use std::collections::BTreeMap;
use thiserror::Error;

/// Kilometres per light-second.
pub const LIGHT_KM_PER_S: f64 = 299_792.458;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("rate must be positive, got {0}")]
    Rate(f64),
    #[error("round_fraction must lie in (0, 1], got {0}")]
    RoundFraction(f64),
    #[error("processing_factor must be positive, got {0}")]
    ProcessingFactor(f64),
    #[error("M must be at least 1")]
    ZeroM,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostInputs {
    /// `M`.
    pub m_link: u64,
    /// `m`, digits per elementary value.
    pub m_digits: u64,
    /// Bits per second.
    pub rate: f64,
    pub processing_factor: f64,
    pub round_fraction: f64,
}

impl CostInputs {
    pub fn new(m_link: u64, m_digits: u64, rate: f64) -> Result<Self, CostError> {
        let c = CostInputs {
            m_link,
            m_digits,
            rate,
            processing_factor: 3.0,
            round_fraction: 0.1,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if self.m_link == 0 {
            return Err(CostError::ZeroM);
        }
        if !(self.rate > 0.0) {
            return Err(CostError::Rate(self.rate));
        }
        if !(self.round_fraction > 0.0 && self.round_fraction <= 1.0) {
            return Err(CostError::RoundFraction(self.round_fraction));
        }
        if !(self.processing_factor > 0.0) {
            return Err(CostError::ProcessingFactor(self.processing_factor));
        }
        Ok(())
    }

    /// `M = 40`, `m = 2`, 10 GHz.
    pub fn case_one() -> Self {
        CostInputs::new(40, 2, 1e10).expect("constant inputs")
    }

    /// `M = 200`, `m = 2`, 10 GHz.
    pub fn case_two() -> Self {
        CostInputs::new(200, 2, 1e10).expect("constant inputs")
    }
}

/// `ceil(log2 x)` for `x >= 1`.
pub fn ceil_log2(x: &BigUint) -> u64 {
    if x <= &BigUint::one() {
        0
    } else {
        (x - 1u32).bits()
    }
}

/// `(2M)! / M!`, the number of injections of `M` pairs into `2M`.
pub fn linking_count(m: u64) -> BigUint {
    (m + 1..=2 * m).fold(BigUint::one(), |acc, k| acc * k)
}

/// `ceil(log2((2M)! / M!))`.
pub fn linking_choice_bits(m: u64) -> u64 {
    ceil_log2(&linking_count(m))
}

/// Site 2: `2Mm` pairs from B2 and `2Mm` replies from A2 per child, `8Mm^2` total.
pub fn site2_bits_per_round(m: u64, digits: u64) -> u64 {
    8 * m * digits * digits
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Site1Bits {
    pub alice: u64,
    pub bob: u64,
}

impl Site1Bits {
    pub fn total(&self) -> u64 {
        self.alice + self.bob
    }
}

/// A1: `4Mm` reply bits, `M` relations, `2Mm^2` opened digits.
/// B1: `4Mm` challenge bits, the injection, `M` query-mask bits and `M` spot choices.
pub fn site1_breakdown(m: u64, digits: u64) -> Site1Bits {
    Site1Bits {
        alice: 4 * m * digits + m + 2 * m * digits * digits,
        bob: 4 * m * digits + linking_choice_bits(m) + 2 * m,
    }
}

pub fn site1_bits_per_round(m: u64, digits: u64) -> u64 {
    site1_breakdown(m, digits).total()
}

/// `M (2m^2 + 8m + log2 M + 3)`.
pub fn site1_bits_approx(m: u64, digits: u64) -> f64 {
    let (mf, d) = (m as f64, digits as f64);
    mf * (2.0 * d * d + 8.0 * d + mf.log2() + 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseReport {
    pub inputs: CostInputs,
    pub site1_exact: u64,
    pub site1_approx: f64,
    pub site2: u64,
    pub max_bits: u64,
    /// Transmission time of `max_bits` alone.
    pub transmit_time: f64,
    /// `processing_factor * transmit_time`.
    pub round_time: f64,
    pub min_separation_km: f64,
}

pub fn round_time_for(bits: f64, inputs: &CostInputs) -> f64 {
    inputs.processing_factor * bits / inputs.rate
}

pub fn separation_km_for(bits: f64, inputs: &CostInputs) -> f64 {
    round_time_for(bits, inputs) / inputs.round_fraction * LIGHT_KM_PER_S
}

pub fn case_report(inputs: CostInputs) -> CaseReport {
    let site1_exact = site1_bits_per_round(inputs.m_link, inputs.m_digits);
    let site2 = site2_bits_per_round(inputs.m_link, inputs.m_digits);
    let max_bits = site1_exact.max(site2);
    CaseReport {
        inputs,
        site1_exact,
        site1_approx: site1_bits_approx(inputs.m_link, inputs.m_digits),
        site2,
        max_bits,
        transmit_time: max_bits as f64 / inputs.rate,
        round_time: round_time_for(max_bits as f64, &inputs),
        min_separation_km: separation_km_for(max_bits as f64, &inputs),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeterError {
    #[error("record {seq} ({msg_type}): declared {declared} bits, encoding rule gives {expected}")]
    EncodingMismatch {
        seq: u64,
        msg_type: String,
        declared: u64,
        expected: u64,
    },
    #[error("record {seq} ({msg_type}): {reason}")]
    Unmeterable { seq: u64, msg_type: String, reason: String },
}

/// A-B traffic inside one region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionBits {
    pub region: RegionId,
    pub alice: u64,
    pub bob: u64,
    /// Unveiling data, kept out of the per-round totals.
    pub unveil: u64,
}

impl RegionBits {
    pub fn site(&self) -> Site {
        self.region.site()
    }

    pub fn total(&self) -> u64 {
        self.alice + self.bob
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TranscriptMeter {
    pub regions: BTreeMap<u32, RegionBits>,
    /// B-B forwards and any other same-side traffic.
    pub coordination: u64,
}

impl TranscriptMeter {
    pub fn region(&self, region: RegionId) -> Option<&RegionBits> {
        self.regions.get(&region.0)
    }

    pub fn site_total(&self, site: Site) -> u64 {
        self.regions.values().filter(|r| r.site() == site).map(RegionBits::total).sum()
    }
}

/// Sums declared bit sizes per region, rejecting any record whose size or
/// payload length disagrees with the encoding rules.
pub fn meter_transcript(transcript: &Transcript) -> Result<TranscriptMeter, MeterError> {
    let cfg = &transcript.config;
    let mut meter = TranscriptMeter::default();
    for r in &transcript.records {
        let expected = expected_bits(r.kind, r.region, cfg).map_err(|e| MeterError::Unmeterable {
            seq: r.seq,
            msg_type: r.msg_type(),
            reason: e.to_string(),
        })?;
        if r.bit_size != expected {
            return Err(MeterError::EncodingMismatch {
                seq: r.seq,
                msg_type: r.msg_type(),
                declared: r.bit_size,
                expected,
            });
        }
        if r.payload.len() as u64 != expected.div_ceil(8) {
            return Err(MeterError::EncodingMismatch {
                seq: r.seq,
                msg_type: r.msg_type(),
                declared: 8 * r.payload.len() as u64,
                expected,
            });
        }
        let Some(region) = r.region.filter(|_| r.is_protocol()) else {
            meter.coordination += r.bit_size;
            continue;
        };
        let entry = meter.regions.entry(region.0).or_insert(RegionBits {
            region,
            alice: 0,
            bob: 0,
            unveil: 0,
        });
        if r.kind == MsgKind::Unveil {
            entry.unveil += r.bit_size;
        } else if r.sender.is_bob() {
            entry.bob += r.bit_size;
        } else {
            entry.alice += r.bit_size;
        }
    }
    Ok(meter)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site2_examples() {
        assert_eq!(site2_bits_per_round(40, 2), 1280);
        assert_eq!(site2_bits_per_round(200, 2), 6400);
        assert_eq!(site2_bits_per_round(0, 2), 0);
    }

    #[test]
    fn linking_bits_match_float_oracle() {
        for m in 1..=400u64 {
            let lg: f64 = (m + 1..=2 * m).map(|k| (k as f64).log2()).sum();
            let bits = linking_choice_bits(m);
            // the float sum is accurate to far better than the distance to the next integer here
            assert!((bits as f64 - lg) >= -1e-6 && (bits as f64 - lg) < 1.0 + 1e-6, "M={m}");
        }
        assert_eq!(linking_choice_bits(40), 236);
        assert_eq!(linking_choice_bits(200), 1641);
        assert_eq!(linking_choice_bits(1), 1);
        assert_eq!(linking_choice_bits(2), 4);
    }

    #[test]
    fn site1_examples() {
        assert_eq!(site1_bits_per_round(200, 2), 7041);
        assert_eq!(site1_breakdown(200, 2), Site1Bits { alice: 3400, bob: 3641 });
        assert_eq!(site1_bits_per_round(40, 2), 1316);
        assert_eq!(site1_breakdown(40, 2), Site1Bits { alice: 680, bob: 636 });
        assert!((site1_bits_approx(40, 2) - 1292.877).abs() < 1e-3);
    }

    #[test]
    fn exact_tracks_approx_within_m() {
        for m in 2..=400u64 {
            for d in 1..=4 {
                let e = site1_bits_per_round(m, d) as f64;
                let a = site1_bits_approx(m, d);
                assert!(e >= a - m as f64 && e <= a + m as f64, "M={m} m={d}: {e} vs {a}");
            }
        }
    }

    #[test]
    fn case_one_timing() {
        let r = case_report(CostInputs::case_one());
        let site2_bits = r.site2 as f64;
        assert_eq!(site2_bits, 1280.0);
        assert!((site2_bits / 1e10 - 1.28e-7).abs() < 1e-12);
        assert!((round_time_for(site2_bits, &r.inputs) - 3.84e-7).abs() < 1e-12);
        assert!((separation_km_for(site2_bits, &r.inputs) - 1.1512).abs() < 1e-3);
        assert_eq!(r.max_bits, 1316);
        assert!((r.min_separation_km - 1.1836).abs() < 1e-3);
    }

    #[test]
    fn case_two_readings() {
        let r = case_report(CostInputs::case_two());
        assert_eq!(r.max_bits, 7041);
        assert!((r.min_separation_km - 6.3325).abs() < 1e-3);
        assert!((separation_km_for(1e4, &r.inputs) - 8.9938).abs() < 1e-3);
    }

    #[test]
    fn report_is_monotone() {
        let mut prev: Option<CaseReport> = None;
        for m in 1..=200 {
            let r = case_report(CostInputs::new(m, 2, 1e10).unwrap());
            if let Some(p) = prev {
                assert!(r.max_bits >= p.max_bits && r.min_separation_km >= p.min_separation_km);
            }
            for d in 3..=4 {
                let hi = case_report(CostInputs::new(m, d, 1e10).unwrap());
                let lo = case_report(CostInputs::new(m, d - 1, 1e10).unwrap());
                assert!(hi.max_bits >= lo.max_bits);
            }
            prev = Some(r);
        }
    }

    #[test]
    fn input_validation() {
        assert_eq!(CostInputs::new(4, 2, 0.0), Err(CostError::Rate(0.0)));
        let mut c = CostInputs::case_one();
        c.round_fraction = 1.5;
        assert!(c.validate().is_err());
    }
}
