//! Message payloads and their fixed-width bit encodings.
//!
//! Values are written most significant bit first. A challenge pair costs
//! `m` bits under the zero convention (only `n1` travels) and `2m` without.

use super::{ProtocolKind, SessionConfig};
use crate::costmodel::{linking_choice_bits, linking_count};
use crate::elementary::ChallengePair;
use crate::rudich::{Component, Relation};
use crate::spacetime::RegionId;
use bitvec::prelude::*;
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MsgKind {
    Challenge,
    Reply,
    LinkQuery,
    Relations,
    SpotChoices,
    LinkOpen,
    Unveil,
    Forward,
}

impl MsgKind {
    pub const ALL: [MsgKind; 8] = [
        MsgKind::Challenge,
        MsgKind::Reply,
        MsgKind::LinkQuery,
        MsgKind::Relations,
        MsgKind::SpotChoices,
        MsgKind::LinkOpen,
        MsgKind::Unveil,
        MsgKind::Forward,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MsgKind::Challenge => "challenge",
            MsgKind::Reply => "reply",
            MsgKind::LinkQuery => "link-query",
            MsgKind::Relations => "relations",
            MsgKind::SpotChoices => "spot-choices",
            MsgKind::LinkOpen => "link-open",
            MsgKind::Unveil => "unveil",
            MsgKind::Forward => "forward",
        }
    }

    pub fn parse(s: &str) -> Option<MsgKind> {
        MsgKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Sent by Bob to Alice.
    pub fn is_query(self) -> bool {
        matches!(self, MsgKind::Challenge | MsgKind::LinkQuery | MsgKind::SpotChoices)
    }

    /// The message whose reception prompts this one, within the same region.
    pub fn trigger(self) -> Option<MsgKind> {
        match self {
            MsgKind::Reply | MsgKind::Unveil => Some(MsgKind::Challenge),
            MsgKind::LinkQuery => Some(MsgKind::Reply),
            MsgKind::Relations => Some(MsgKind::LinkQuery),
            MsgKind::SpotChoices => Some(MsgKind::Relations),
            MsgKind::LinkOpen => Some(MsgKind::SpotChoices),
            MsgKind::Challenge | MsgKind::Forward => None,
        }
    }
}

impl fmt::Display for MsgKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Challenge(Vec<ChallengePair>),
    Reply(Vec<u64>),
    LinkQuery { injection: Vec<usize>, mask: Vec<bool> },
    Relations(Vec<Relation>),
    SpotChoices(Vec<Component>),
    /// `M m` values opening old elementaries, then `M m` opening new ones.
    LinkOpen(Vec<u64>),
    Unveil(Vec<u64>),
    /// Sequence number of the forwarded record.
    Forward(u64),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("payload holds {got} bits, {kind} needs {need}")]
    Short { kind: MsgKind, got: usize, need: u64 },
    #[error("{kind} is not sent in region {region}")]
    WrongRegion { kind: MsgKind, region: RegionId },
    #[error("injection rank out of range")]
    InjectionRank,
    #[error("{0} is missing its region")]
    MissingRegion(MsgKind),
}

impl Message {
    pub fn kind(&self) -> MsgKind {
        match self {
            Message::Challenge(_) => MsgKind::Challenge,
            Message::Reply(_) => MsgKind::Reply,
            Message::LinkQuery { .. } => MsgKind::LinkQuery,
            Message::Relations(_) => MsgKind::Relations,
            Message::SpotChoices(_) => MsgKind::SpotChoices,
            Message::LinkOpen(_) => MsgKind::LinkOpen,
            Message::Unveil(_) => MsgKind::Unveil,
            Message::Forward(_) => MsgKind::Forward,
        }
    }

    pub fn values(&self) -> &[u64] {
        match self {
            Message::Reply(v) | Message::LinkOpen(v) | Message::Unveil(v) => v,
            _ => &[],
        }
    }

    pub fn encode(&self, cfg: &SessionConfig) -> BitVec<u8, Msb0> {
        let w = cfg.digits();
        let mut bits = BitVec::<u8, Msb0>::new();
        match self {
            Message::Challenge(pairs) => {
                for p in pairs {
                    if !cfg.params.zero_convention {
                        push_value(&mut bits, p.n0, w);
                    }
                    push_value(&mut bits, p.n1, w);
                }
            }
            Message::Reply(v) | Message::LinkOpen(v) | Message::Unveil(v) => {
                for &x in v {
                    push_value(&mut bits, x, w);
                }
            }
            Message::LinkQuery { injection, mask } => {
                let m = cfg.m() as u64;
                let rank = encode_injection(injection, 2 * injection.len());
                push_big(&mut bits, &rank, linking_choice_bits(m) as usize);
                bits.extend(mask.iter().copied());
            }
            Message::Relations(r) => bits.extend(r.iter().map(|r| r.bit() == 1)),
            Message::SpotChoices(c) => bits.extend(c.iter().map(|c| c.bit() == 1)),
            Message::Forward(seq) => push_value(&mut bits, *seq, 64),
        }
        bits
    }

    pub fn decode(
        kind: MsgKind,
        region: Option<RegionId>,
        bits: &BitSlice<u8, Msb0>,
        cfg: &SessionConfig,
    ) -> Result<Message, DecodeError> {
        let need = expected_bits(kind, region, cfg)?;
        if (bits.len() as u64) < need {
            return Err(DecodeError::Short {
                kind,
                got: bits.len(),
                need,
            });
        }
        let w = cfg.digits();
        let m = cfg.m();
        let values = |n: usize| -> Vec<u64> { (0..n).map(|i| read_value(&bits[i * w..(i + 1) * w])).collect() };
        let region_of = || region.ok_or(DecodeError::MissingRegion(kind));
        Ok(match kind {
            MsgKind::Challenge => {
                let n = cfg.challenge_len(region_of()?);
                let per = if cfg.params.zero_convention { w } else { 2 * w };
                Message::Challenge(
                    (0..n)
                        .map(|i| {
                            let chunk = &bits[i * per..(i + 1) * per];
                            let (n0, n1) = if cfg.params.zero_convention {
                                (0, read_value(chunk))
                            } else {
                                (read_value(&chunk[..w]), read_value(&chunk[w..]))
                            };
                            ChallengePair { label: i as u64, n0, n1 }
                        })
                        .collect(),
                )
            }
            MsgKind::Reply => Message::Reply(values(cfg.challenge_len(region_of()?))),
            MsgKind::LinkOpen => Message::LinkOpen(values(2 * m * w)),
            MsgKind::Unveil => Message::Unveil(values(cfg.unveil_len(region_of()?))),
            MsgKind::LinkQuery => {
                let fb = linking_choice_bits(m as u64) as usize;
                let rank = read_big(&bits[..fb]);
                let injection = decode_injection(&rank, m, 2 * m).ok_or(DecodeError::InjectionRank)?;
                let mask = bits[fb..fb + m].iter().map(|b| *b).collect();
                Message::LinkQuery { injection, mask }
            }
            MsgKind::Relations => Message::Relations(bits[..m].iter().map(|b| Relation::from_bit(*b as u8)).collect()),
            MsgKind::SpotChoices => {
                Message::SpotChoices(bits[..m].iter().map(|b| Component::from_bit(*b as u8)).collect())
            }
            MsgKind::Forward => Message::Forward(read_value(&bits[..64])),
        })
    }
}

/// Bit length fixed by the encoding rules for `kind` in `region`.
pub fn expected_bits(kind: MsgKind, region: Option<RegionId>, cfg: &SessionConfig) -> Result<u64, DecodeError> {
    let w = cfg.digits() as u64;
    let m = cfg.m() as u64;
    if kind == MsgKind::Forward {
        return Ok(64);
    }
    let region = region.ok_or(DecodeError::MissingRegion(kind))?;
    let linking = cfg.kind == ProtocolKind::Rbc2 && region.is_p() && region.round() >= 2;
    let wrong = || Err(DecodeError::WrongRegion { kind, region });
    Ok(match kind {
        MsgKind::Challenge => cfg.challenge_len(region) as u64 * cfg.params.pair_bits(),
        MsgKind::Reply => cfg.challenge_len(region) as u64 * w,
        MsgKind::Unveil => cfg.unveil_len(region) as u64 * w,
        MsgKind::LinkQuery if linking => linking_choice_bits(m) + m,
        MsgKind::Relations | MsgKind::SpotChoices if linking => m,
        MsgKind::LinkOpen if linking => 2 * m * w * w,
        _ => return wrong(),
    })
}

fn push_value(bits: &mut BitVec<u8, Msb0>, value: u64, width: usize) {
    for k in (0..width).rev() {
        bits.push((value >> k) & 1 == 1);
    }
}

fn read_value(bits: &BitSlice<u8, Msb0>) -> u64 {
    bits.iter().fold(0u64, |acc, b| (acc << 1) | *b as u64)
}

fn push_big(bits: &mut BitVec<u8, Msb0>, value: &BigUint, width: usize) {
    for k in (0..width).rev() {
        bits.push(value.bit(k as u64));
    }
}

fn read_big(bits: &BitSlice<u8, Msb0>) -> BigUint {
    let mut acc = BigUint::zero();
    for b in bits.iter() {
        acc <<= 1u32;
        if *b {
            acc += 1u32;
        }
    }
    acc
}

/// Mixed-radix rank of an injection `{0..m} -> {0..n}`: entry `j` is coded
/// by its position among the targets still unused, in radix `n - j`.
pub fn encode_injection(injection: &[usize], n: usize) -> BigUint {
    let mut unused: Vec<usize> = (0..n).collect();
    let mut rank = BigUint::zero();
    for (j, &t) in injection.iter().enumerate() {
        let pos = unused.iter().position(|&u| u == t).expect("injection target repeated or out of range");
        unused.remove(pos);
        rank = rank * (n - j) + pos;
    }
    rank
}

pub fn decode_injection(rank: &BigUint, m: usize, n: usize) -> Option<Vec<usize>> {
    if rank >= &linking_count_general(m, n) {
        return None;
    }
    let mut digits = vec![0usize; m];
    let mut r = rank.clone();
    for j in (0..m).rev() {
        let radix = n - j;
        digits[j] = (&r % radix).to_usize()?;
        r /= radix;
    }
    let mut unused: Vec<usize> = (0..n).collect();
    Some(digits.into_iter().map(|d| unused.remove(d)).collect())
}

fn linking_count_general(m: usize, n: usize) -> BigUint {
    if n == 2 * m {
        linking_count(m as u64)
    } else {
        (n - m + 1..=n).fold(BigUint::from(1u32), |acc, k| acc * k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rudich::all_injections;
    use proptest::prelude::*;

    #[test]
    fn injection_rank_is_a_bijection() {
        for m in 1..=3 {
            let all = all_injections(m, 2 * m);
            for (i, f) in all.iter().enumerate() {
                let r = encode_injection(f, 2 * m);
                assert_eq!(r, BigUint::from(i));
                assert_eq!(decode_injection(&r, m, 2 * m).as_ref(), Some(f));
            }
            assert!(decode_injection(&BigUint::from(all.len()), m, 2 * m).is_none());
        }
    }

    #[test]
    fn message_kinds_round_trip_names() {
        for k in MsgKind::ALL {
            assert_eq!(MsgKind::parse(k.as_str()), Some(k));
        }
        assert_eq!(MsgKind::parse("nope"), None);
    }

    proptest! {
        #[test]
        fn payloads_round_trip(seed in any::<u64>(), m in 1usize..6, n in prop::sample::select(vec![4u64, 5, 16])) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cfg = SessionConfig::rbc2(n, m, 6, None, seed).unwrap();
            let region = RegionId::p(2);
            let pairs: Vec<_> = (0..cfg.challenge_len(region)).map(|i| ChallengePair::random(i as u64, &cfg.params, &mut rng)).collect();
            let injection = crate::rudich::sample_injection(m, 2 * m, &mut rng);
            let msgs = vec![
                Message::Challenge(pairs.clone()),
                Message::Reply(pairs.iter().map(|_| rng.gen_range(0..n)).collect()),
                Message::LinkQuery { injection, mask: (0..m).map(|_| rng.gen()).collect() },
                Message::Relations((0..m).map(|_| Relation::from_bit(rng.gen_range(0..2))).collect()),
                Message::SpotChoices((0..m).map(|_| Component::from_bit(rng.gen_range(0..2))).collect()),
                Message::LinkOpen((0..2 * m * cfg.digits()).map(|_| rng.gen_range(0..n)).collect()),
                Message::Unveil((0..cfg.unveil_len(region)).map(|_| rng.gen_range(0..n)).collect()),
                Message::Forward(rng.gen()),
            ];
            for msg in msgs {
                let bits = msg.encode(&cfg);
                let reg = (msg.kind() != MsgKind::Forward).then_some(region);
                prop_assert_eq!(bits.len() as u64, expected_bits(msg.kind(), reg, &cfg).unwrap());
                let back = Message::decode(msg.kind(), reg, &bits, &cfg).unwrap();
                prop_assert_eq!(back, msg);
            }
        }
    }
}
