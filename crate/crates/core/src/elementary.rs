//! Elementary commitment arithmetic modulo `N`.
//!
//! Alice commits a bit (or a binary digit) `v` against Bob's pair `(n0, n1)`
//! by replying `n_v + r mod N` with fresh randomness `r`. Sustaining a link
//! commits each binary digit of its `r` against `m` new pairs, least
//! significant digit first.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ElementaryError {
    #[error("modulus N = {0} is below the minimum of 4")]
    ModulusTooSmall(u64),
    #[error("invalid challenge pair ({n0}, {n1}): {reason}")]
    InvalidPair { n0: u64, n1: u64, reason: &'static str },
    #[error("value {value} out of range [0, {bound})")]
    OutOfRange { value: u64, bound: u64 },
    #[error("commitment already sustained")]
    AlreadySustained,
    #[error("expected {expected} entries, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("nothing to reveal: commitment has no sustaining children and no pre-agreed randomness")]
    NothingToReveal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolParams {
    modulus: u64,
    digits: u32,
    pub zero_convention: bool,
}

impl ProtocolParams {
    /// `N >= 4`; `m = ceil(log2 N)`; zero convention on.
    pub fn new(modulus: u64) -> Result<Self, ElementaryError> {
        if modulus < 4 {
            return Err(ElementaryError::ModulusTooSmall(modulus));
        }
        let digits = 64 - (modulus - 1).leading_zeros();
        Ok(ProtocolParams {
            modulus,
            digits,
            zero_convention: true,
        })
    }

    pub fn with_zero_convention(mut self, on: bool) -> Self {
        self.zero_convention = on;
        self
    }

    /// `N`.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// `m`, the number of binary digits used to sustain a commitment.
    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Bits needed to transmit one value in `[0, N)`.
    pub fn value_bits(&self) -> u64 {
        self.digits as u64
    }

    /// Bits Bob transmits per challenge pair.
    pub fn pair_bits(&self) -> u64 {
        if self.zero_convention {
            self.value_bits()
        } else {
            2 * self.value_bits()
        }
    }

    pub fn random_value<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.modulus)
    }
}

/// Bob's labelled pair `(n_{j,0}, n_{j,1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChallengePair {
    pub label: u64,
    pub n0: u64,
    pub n1: u64,
}

impl ChallengePair {
    pub fn new(label: u64, n0: u64, n1: u64, params: &ProtocolParams) -> Result<Self, ElementaryError> {
        let pair = ChallengePair { label, n0, n1 };
        pair.validate(params)?;
        Ok(pair)
    }

    pub fn validate(&self, params: &ProtocolParams) -> Result<(), ElementaryError> {
        let (n0, n1) = (self.n0, self.n1);
        if n0 >= params.modulus || n1 >= params.modulus {
            return Err(ElementaryError::InvalidPair { n0, n1, reason: "entry not below N" });
        }
        if n0 == n1 {
            return Err(ElementaryError::InvalidPair { n0, n1, reason: "entries must differ" });
        }
        if params.zero_convention && n0 != 0 {
            return Err(ElementaryError::InvalidPair {
                n0,
                n1,
                reason: "zero convention requires n0 = 0",
            });
        }
        Ok(())
    }

    /// Uniform pair with `n0 != n1`; `n0 = 0` under the zero convention.
    pub fn random<R: Rng + ?Sized>(label: u64, params: &ProtocolParams, rng: &mut R) -> Self {
        let n = params.modulus;
        if params.zero_convention {
            ChallengePair {
                label,
                n0: 0,
                n1: rng.gen_range(1..n),
            }
        } else {
            let n0 = rng.gen_range(0..n);
            let n1 = (n0 + rng.gen_range(1..n)) % n;
            ChallengePair { label, n0, n1 }
        }
    }

    pub fn n(&self, bit: u8) -> u64 {
        if bit == 0 {
            self.n0
        } else {
            self.n1
        }
    }
}

/// `n_value + randomness mod N`.
pub fn commit_reply(value: u8, pair: &ChallengePair, randomness: u64, params: &ProtocolParams) -> u64 {
    debug_assert!(value <= 1 && randomness < params.modulus);
    (pair.n(value) + randomness) % params.modulus
}

/// Binary digits of `value`, least significant first.
pub fn to_digits(value: u64, digits: u32) -> Vec<u8> {
    (0..digits).map(|k| ((value >> k) & 1) as u8).collect()
}

pub fn from_digits(digits: &[u8]) -> u64 {
    digits.iter().enumerate().fold(0, |acc, (k, &d)| acc | ((d as u64) << k))
}

/// The unique `d` with `reply = n_d + revealed mod N`, if exactly one exists.
pub fn open_commitment(pair: &ChallengePair, reply: u64, revealed: u64, params: &ProtocolParams) -> Option<u8> {
    let n = params.modulus;
    if revealed >= n || reply >= n {
        return None;
    }
    let hits: Vec<u8> = [0u8, 1]
        .into_iter()
        .filter(|&d| (pair.n(d) + revealed) % n == reply)
        .collect();
    match hits.as_slice() {
        [d] => Some(*d),
        _ => None,
    }
}

/// Decodes the `m` digits committed by `replies` and reassembles them.
/// Returns `None` if any digit fails to decode or the result is not below `N`.
pub fn decode_randomness(
    pairs: &[ChallengePair],
    replies: &[u64],
    revealed: &[u64],
    params: &ProtocolParams,
) -> Option<u64> {
    let m = params.digits as usize;
    if pairs.len() != m || replies.len() != m || revealed.len() != m {
        return None;
    }
    let mut digits = Vec::with_capacity(m);
    for ((pair, &reply), &r) in pairs.iter().zip(replies).zip(revealed) {
        digits.push(open_commitment(pair, reply, r, params)?);
    }
    let value = from_digits(&digits);
    (value < params.modulus).then_some(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainVerdict {
    Accept(u8),
    Reject,
}

/// Bob's check of one sustained commitment from the revealed randomness of
/// its sustaining replies.
pub fn verify_chain(
    root_pair: &ChallengePair,
    root_reply: u64,
    child_pairs: &[ChallengePair],
    child_replies: &[u64],
    revealed: &[u64],
    params: &ProtocolParams,
) -> ChainVerdict {
    let Some(randomness) = decode_randomness(child_pairs, child_replies, revealed, params) else {
        return ChainVerdict::Reject;
    };
    match open_commitment(root_pair, root_reply, randomness, params) {
        Some(b) => ChainVerdict::Accept(b),
        None => ChainVerdict::Reject,
    }
}

/// One commitment link and the chains that sustain its randomness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitmentChain {
    pub value: u8,
    pub alice_random: u64,
    pub pair: ChallengePair,
    pub reply: u64,
    pub round: u32,
    pub children: Vec<CommitmentChain>,
    /// Randomness fixed in advance for the next round, for first-round unveiling.
    pub pre_agreed: Option<Vec<u64>>,
}

impl CommitmentChain {
    pub fn commit(
        value: u8,
        pair: ChallengePair,
        randomness: u64,
        round: u32,
        params: &ProtocolParams,
    ) -> Result<Self, ElementaryError> {
        if value > 1 {
            return Err(ElementaryError::OutOfRange { value: value as u64, bound: 2 });
        }
        if randomness >= params.modulus {
            return Err(ElementaryError::OutOfRange {
                value: randomness,
                bound: params.modulus,
            });
        }
        pair.validate(params)?;
        Ok(CommitmentChain {
            value,
            alice_random: randomness,
            reply: commit_reply(value, &pair, randomness, params),
            pair,
            round,
            children: Vec::new(),
            pre_agreed: None,
        })
    }

    pub fn is_sustained(&self) -> bool {
        !self.children.is_empty()
    }

    /// Commits the digits of `alice_random` against `pairs`, digit `k` against
    /// `pairs[k]`, and returns the replies.
    pub fn sustain(
        &mut self,
        pairs: &[ChallengePair],
        fresh_randomness: &[u64],
        round: u32,
        params: &ProtocolParams,
    ) -> Result<Vec<u64>, ElementaryError> {
        if self.is_sustained() {
            return Err(ElementaryError::AlreadySustained);
        }
        let m = params.digits as usize;
        for len in [pairs.len(), fresh_randomness.len()] {
            if len != m {
                return Err(ElementaryError::ArityMismatch { expected: m, got: len });
            }
        }
        let digits = to_digits(self.alice_random, params.digits);
        let children = digits
            .iter()
            .zip(pairs)
            .zip(fresh_randomness)
            .map(|((&d, &pair), &r)| CommitmentChain::commit(d, pair, r, round, params))
            .collect::<Result<Vec<_>, _>>()?;
        let replies = children.iter().map(|c| c.reply).collect();
        self.children = children;
        Ok(replies)
    }

    pub fn child_pairs(&self) -> Vec<ChallengePair> {
        self.children.iter().map(|c| c.pair).collect()
    }

    pub fn child_replies(&self) -> Vec<u64> {
        self.children.iter().map(|c| c.reply).collect()
    }
}

/// Randomness Alice discloses to open `chain`: that of its sustaining
/// children, or the pre-agreed next-round randomness before sustaining.
pub fn unveil_data(chain: &CommitmentChain) -> Result<Vec<u64>, ElementaryError> {
    if chain.is_sustained() {
        return Ok(chain.children.iter().map(|c| c.alice_random).collect());
    }
    chain.pre_agreed.clone().ok_or(ElementaryError::NothingToReveal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(n: u64) -> ProtocolParams {
        ProtocolParams::new(n).unwrap()
    }

    fn pair(label: u64, n0: u64, n1: u64) -> ChallengePair {
        ChallengePair { label, n0, n1 }
    }

    #[test]
    fn params() {
        assert_eq!(p(4).digits(), 2);
        assert_eq!(p(16).digits(), 4);
        assert_eq!(p(5).digits(), 3);
        assert_eq!(p(8).digits(), 3);
        assert!(ProtocolParams::new(3).is_err());
    }

    #[test]
    fn commit_reply_examples() {
        let q = p(16).with_zero_convention(false);
        assert_eq!(commit_reply(0, &pair(1, 0, 5), 0, &q), 0);
        assert_eq!(commit_reply(1, &pair(1, 0, 5), 7, &q), 12);
        assert_eq!(commit_reply(1, &pair(1, 3, 9), 10, &q), 3);
    }

    #[test]
    fn pair_validation() {
        let q = p(16);
        assert!(ChallengePair::new(0, 0, 5, &q).is_ok());
        assert!(ChallengePair::new(0, 3, 5, &q).is_err());
        assert!(ChallengePair::new(0, 0, 0, &q).is_err());
        assert!(ChallengePair::new(0, 0, 16, &q).is_err());
        assert!(ChallengePair::new(0, 3, 5, &q.with_zero_convention(false)).is_ok());
    }

    #[test]
    fn sustain_examples() {
        let q = p(16);
        let root = pair(1, 0, 9);
        let mut chain = CommitmentChain::commit(1, root, 6, 1, &q).unwrap();
        let pairs: Vec<_> = (1..=4).map(|k| pair(k + 1, 0, k)).collect();
        let replies = chain.sustain(&pairs, &[0, 0, 0, 0], 2, &q).unwrap();
        assert_eq!(replies, vec![0, 2, 3, 0]);
        assert_eq!(chain.sustain(&pairs, &[0; 4], 2, &q), Err(ElementaryError::AlreadySustained));

        let mut zero = CommitmentChain::commit(0, root, 0, 1, &q).unwrap();
        let fresh = [3, 1, 4, 1];
        assert_eq!(zero.sustain(&pairs, &fresh, 2, &q).unwrap(), fresh.to_vec());
        assert_eq!(unveil_data(&zero).unwrap(), fresh.to_vec());

        let mut short = CommitmentChain::commit(0, root, 0, 1, &q).unwrap();
        assert_eq!(
            short.sustain(&pairs[..3], &[0; 3], 2, &q),
            Err(ElementaryError::ArityMismatch { expected: 4, got: 3 })
        );
    }

    #[test]
    fn unveil_data_variants() {
        let q = p(4);
        let mut chain = CommitmentChain::commit(1, pair(1, 0, 3), 2, 1, &q).unwrap();
        assert_eq!(unveil_data(&chain), Err(ElementaryError::NothingToReveal));
        chain.pre_agreed = Some(vec![2, 7]);
        assert_eq!(unveil_data(&chain).unwrap(), vec![2, 7]);
    }

    #[test]
    fn perturbed_reveal_is_rejected() {
        let q = p(16);
        let root = pair(0, 0, 11);
        let mut chain = CommitmentChain::commit(1, root, 9, 1, &q).unwrap();
        let pairs: Vec<_> = [5, 7, 2, 13].iter().enumerate().map(|(k, &n)| pair(k as u64, 0, n)).collect();
        chain.sustain(&pairs, &[3, 8, 1, 15], 2, &q).unwrap();
        let mut revealed = unveil_data(&chain).unwrap();
        assert_eq!(
            verify_chain(&root, chain.reply, &pairs, &chain.child_replies(), &revealed, &q),
            ChainVerdict::Accept(1)
        );
        revealed[2] = (revealed[2] + 1) % 16;
        // digit 2 decodes only if +1 equals +-n1 = +-2 mod 16; it doesn't
        let n = pairs[2].n1;
        let decodes = [0, 1].iter().any(|&d| (pairs[2].n(d) + revealed[2]) % 16 == chain.children[2].reply);
        assert!(!decodes && n != 1 && n != 15);
        assert_eq!(
            verify_chain(&root, chain.reply, &pairs, &chain.child_replies(), &revealed, &q),
            ChainVerdict::Reject
        );
    }

    // A fixed forged unveiling for the flipped bit passes exactly when Bob's
    // pairs happen to match the difference Alice guessed.
    #[test]
    fn forged_unveiling_pass_fraction_by_enumeration() {
        let q = p(4);
        let root = pair(0, 0, 1);
        let honest_random = 2u64;
        let chain = CommitmentChain::commit(0, root, honest_random, 1, &q).unwrap();
        let forged_random = (chain.reply + 4 - root.n1) % 4; // opens the root as 1
        let forged_digits = to_digits(forged_random, 2);
        let honest_digits = to_digits(honest_random, 2);
        // Alice guesses both child differences are 1 and reveals accordingly.
        let fresh = [1u64, 3];
        let mut passes = 0;
        let mut total = 0;
        for d0 in 1..4u64 {
            for d1 in 1..4u64 {
                let pairs = [pair(1, 0, d0), pair(2, 0, d1)];
                let replies: Vec<u64> = (0..2)
                    .map(|k| commit_reply(honest_digits[k], &pairs[k], fresh[k], &q))
                    .collect();
                let revealed: Vec<u64> = (0..2)
                    .map(|k| {
                        let guess = pair(0, 0, 1);
                        (replies[k] + 4 - guess.n(forged_digits[k])) % 4
                    })
                    .collect();
                total += 1;
                if verify_chain(&root, chain.reply, &pairs, &replies, &revealed, &q) == ChainVerdict::Accept(1) {
                    passes += 1;
                }
            }
        }
        // oracle: digit k opens as f_k iff Bob's n_{f_k} equals the guessed one,
        // independently per digit
        let expected: u32 = forged_digits
            .iter()
            .map(|&f| (1..4u64).filter(|&d| pair(0, 0, d).n(f) == pair(0, 0, 1).n(f)).count() as u32)
            .product();
        assert_eq!(total, 9);
        assert_eq!(expected, 3);
        assert_eq!(passes, expected);
    }

    #[test]
    fn hiding_is_exact_for_small_moduli() {
        for n in [4u64, 5, 8, 16, 100, 256] {
            let q = p(n).with_zero_convention(false);
            for n0 in 0..n.min(6) {
                for n1 in (0..n).filter(|&x| x != n0).take(6) {
                    let pr = pair(0, n0, n1);
                    for b in 0..2u8 {
                        let mut seen: Vec<u64> = (0..n).map(|r| commit_reply(b, &pr, r, &q)).collect();
                        seen.sort_unstable();
                        assert_eq!(seen, (0..n).collect::<Vec<_>>());
                    }
                }
            }
        }
    }

    #[test]
    fn round_trip_exhaustive_small_n() {
        for n in [4u64, 8] {
            let q = p(n).with_zero_convention(false);
            let m = q.digits() as usize;
            for b in 0..2u8 {
                for mj in 0..n {
                    for n0 in 0..n {
                        for n1 in (0..n).filter(|&x| x != n0) {
                            let root = pair(0, n0, n1);
                            let mut chain = CommitmentChain::commit(b, root, mj, 1, &q).unwrap();
                            let pairs: Vec<_> = (0..m).map(|k| pair(k as u64 + 1, n1, n0)).collect();
                            let fresh: Vec<u64> = (0..m as u64).map(|k| (mj + k) % n).collect();
                            let replies = chain.sustain(&pairs, &fresh, 2, &q).unwrap();
                            let rev = unveil_data(&chain).unwrap();
                            assert_eq!(verify_chain(&root, chain.reply, &pairs, &replies, &rev, &q), ChainVerdict::Accept(b));
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_n16(b in 0u8..2, mj in 0u64..16, n0 in 0u64..16, dn in 1u64..16,
                          child in proptest::collection::vec((0u64..16, 1u64..16, 0u64..16), 4)) {
            let q = p(16).with_zero_convention(false);
            let root = pair(0, n0, (n0 + dn) % 16);
            let mut chain = CommitmentChain::commit(b, root, mj, 1, &q).unwrap();
            let pairs: Vec<_> = child.iter().enumerate().map(|(k, &(c0, cd, _))| pair(k as u64, c0, (c0 + cd) % 16)).collect();
            let fresh: Vec<u64> = child.iter().map(|c| c.2).collect();
            let replies = chain.sustain(&pairs, &fresh, 2, &q).unwrap();
            prop_assert_eq!(verify_chain(&root, chain.reply, &pairs, &replies, &fresh, &q), ChainVerdict::Accept(b));
        }

        #[test]
        fn binding_never_accepts_both_bits(n0 in 0u64..16, dn in 1u64..16, reply in 0u64..16, revealed in proptest::collection::vec(0u64..16, 4),
                                           child in proptest::collection::vec((0u64..16, 1u64..16, 0u64..16), 4)) {
            let q = p(16).with_zero_convention(false);
            let root = pair(0, n0, (n0 + dn) % 16);
            let pairs: Vec<_> = child.iter().enumerate().map(|(k, &(c0, cd, _))| pair(k as u64, c0, (c0 + cd) % 16)).collect();
            let replies: Vec<u64> = child.iter().map(|c| c.2).collect();
            // the verdict is a function, so "accept 0 and accept 1" would need two different decodes
            let v = verify_chain(&root, reply, &pairs, &replies, &revealed, &q);
            if let ChainVerdict::Accept(b) = v {
                let r = decode_randomness(&pairs, &replies, &revealed, &q).unwrap();
                prop_assert_eq!((root.n(b) + r) % 16, reply);
                prop_assert_ne!((root.n(1 - b) + r) % 16, reply);
            }
        }

        #[test]
        fn digit_decoding_is_injective(d in proptest::collection::vec(1u64..16, 4), replies in proptest::collection::vec(0u64..16, 4),
                                       a in proptest::collection::vec(0u64..16, 4), b in proptest::collection::vec(0u64..16, 4)) {
            let q = p(16);
            let pairs: Vec<_> = d.iter().enumerate().map(|(k, &n1)| pair(k as u64, 0, n1)).collect();
            if a != b {
                if let (Some(x), Some(y)) = (decode_randomness(&pairs, &replies, &a, &q), decode_randomness(&pairs, &replies, &b, &q)) {
                    prop_assert_ne!(x, y);
                }
            }
        }
    }
}
