//! Rudich linking over an abstract bit-commitment oracle.
//!
//! A bit `b` is held redundantly as pairs `(x_j, x_j ^ b)`. To show that an
//! `M`-pair batch and a `2M`-pair batch hold the same bit, Bob maps each old
//! pair into the new batch through a random injection `f`, Alice declares
//! each mapped couple equal or opposite, and Bob opens one random component
//! of both pairs to test the declaration. The `M` new pairs outside the image
//! of `f` carry the commitment forward.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RudichError {
    #[error("linking parameter M must be at least 1")]
    ZeroM,
    #[error("gamma_M = {gamma_m} must satisfy 2*gamma_M < M = {m}")]
    GammaTooLarge { m: usize, gamma_m: usize },
    #[error("pairs at position {j} are neither equal nor opposite")]
    NotLinkable { j: usize },
    #[error("batch sizes {old} and {new} do not form an M / 2M linking")]
    SizeMismatch { old: usize, new: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RudichParams {
    m: usize,
    gamma_m: usize,
}

impl RudichParams {
    /// `gamma_M = floor((M - 1) / 2)`.
    pub fn new(m: usize) -> Result<Self, RudichError> {
        if m == 0 {
            return Err(RudichError::ZeroM);
        }
        Self::with_gamma(m, (m - 1) / 2)
    }

    pub fn with_gamma(m: usize, gamma_m: usize) -> Result<Self, RudichError> {
        if m == 0 {
            return Err(RudichError::ZeroM);
        }
        if 2 * gamma_m >= m {
            return Err(RudichError::GammaTooLarge { m, gamma_m });
        }
        Ok(RudichParams { m, gamma_m })
    }

    /// `M`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// `gamma_M`, the number of bad pairs tolerated by effective commitment.
    pub fn gamma_m(&self) -> usize {
        self.gamma_m
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_m as f64 / self.m as f64
    }
}

/// `(b^{1j}, b^{2j})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitPair(pub u8, pub u8);

impl BitPair {
    /// Pair with first component `first` encoding `bit`.
    pub fn encoding(first: u8, bit: u8) -> Self {
        BitPair(first, first ^ bit)
    }

    pub fn xor(self) -> u8 {
        self.0 ^ self.1
    }

    pub fn component(self, c: Component) -> u8 {
        match c {
            Component::First => self.0,
            Component::Second => self.1,
        }
    }
}

/// `m(j)`: which component of a linked couple Bob opens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    First,
    Second,
}

impl Component {
    pub fn index(self) -> usize {
        match self {
            Component::First => 0,
            Component::Second => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Component::First
        } else {
            Component::Second
        }
    }

    pub fn bit(self) -> u8 {
        self.index() as u8
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Component::from_bit(rng.gen_range(0..2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Equal,
    Opposite,
}

impl Relation {
    pub fn bit(self) -> u8 {
        match self {
            Relation::Equal => 0,
            Relation::Opposite => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Relation::Equal
        } else {
            Relation::Opposite
        }
    }

    /// Whether opened bits `a` (old pair) and `b` (new pair) agree with the relation.
    pub fn holds_for(self, a: u8, b: u8) -> bool {
        match self {
            Relation::Equal => a == b,
            Relation::Opposite => a != b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchForm {
    /// `M` pairs.
    First,
    /// `2M` pairs.
    Second,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RudichBatch {
    pub pairs: Vec<BitPair>,
    /// Elementary commitment of component `c` of pair `j` is `handles[2j + c]`.
    pub handles: Vec<usize>,
    pub target_bit: Option<u8>,
}

impl RudichBatch {
    pub fn from_pairs(pairs: Vec<BitPair>, target_bit: Option<u8>) -> Self {
        let handles = (0..2 * pairs.len()).collect();
        RudichBatch {
            pairs,
            handles,
            target_bit,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn count_encoding(&self, bit: u8) -> usize {
        self.pairs.iter().filter(|p| p.xor() == bit).count()
    }
}

/// Draws `size` uniform first components and completes each pair to XOR to `b`.
pub fn make_redundant<R: Rng + ?Sized>(b: u8, size: usize, rng: &mut R) -> RudichBatch {
    let pairs = (0..size).map(|_| BitPair::encoding(rng.gen_range(0..2), b)).collect();
    RudichBatch::from_pairs(pairs, Some(b))
}

/// The relation that holds between two pairs, if any.
pub fn relation_between(old: BitPair, new: BitPair) -> Option<Relation> {
    if old == new {
        Some(Relation::Equal)
    } else if old.0 != new.0 && old.1 != new.1 {
        Some(Relation::Opposite)
    } else {
        None
    }
}

/// Relations for honest batches; `injection[j]` is the 0-based image of old pair `j`.
pub fn declare_relations(old: &RudichBatch, new: &RudichBatch, injection: &[usize]) -> Result<Vec<Relation>, RudichError> {
    injection
        .iter()
        .enumerate()
        .map(|(j, &fj)| relation_between(old.pairs[j], new.pairs[fj]).ok_or(RudichError::NotLinkable { j }))
        .collect()
}

/// A declaration that survives the first-component check, and both checks
/// whenever any relation holds. No declaration does better on a mismatched couple.
pub fn best_declaration(old: BitPair, new: BitPair) -> Relation {
    relation_between(old, new).unwrap_or(if old.0 == new.0 {
        Relation::Equal
    } else {
        Relation::Opposite
    })
}

/// Uniform injection `{0..m} -> {0..n}` by sequential draws without replacement.
pub fn sample_injection<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(m <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let i = rng.gen_range(0..pool.len());
        out.push(pool.remove(i));
    }
    out
}

/// Indices of `0..n` outside the image of `injection`, ascending.
pub fn residual_indices(injection: &[usize], n: usize) -> Vec<usize> {
    let mut used = vec![false; n];
    for &i in injection {
        used[i] = true;
    }
    (0..n).filter(|&i| !used[i]).collect()
}

/// Alice's side of a linking test.
pub trait LinkingProver {
    /// Relations for each `j`, or `None` to refuse.
    fn declare(&mut self, old: &RudichBatch, new: &RudichBatch, injection: &[usize]) -> Option<Vec<Relation>>;

    /// Whether Alice lets the oracle open the requested component.
    fn consent_to_unveil(&mut self, _j: usize, _component: Component) -> bool {
        true
    }
}

/// Declares the true relations; refuses when none holds.
#[derive(Debug, Default, Clone, Copy)]
pub struct HonestProver;

impl LinkingProver for HonestProver {
    fn declare(&mut self, old: &RudichBatch, new: &RudichBatch, injection: &[usize]) -> Option<Vec<Relation>> {
        declare_relations(old, new, injection).ok()
    }
}

/// Declares the best relation for every couple, including mismatched ones.
#[derive(Debug, Default, Clone, Copy)]
pub struct OptimalProver;

impl LinkingProver for OptimalProver {
    fn declare(&mut self, old: &RudichBatch, new: &RudichBatch, injection: &[usize]) -> Option<Vec<Relation>> {
        Some(
            injection
                .iter()
                .enumerate()
                .map(|(j, &fj)| best_declaration(old.pairs[j], new.pairs[fj]))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkingMap {
    pub injection: Vec<usize>,
    pub relations: Vec<Relation>,
    pub spot_choices: Vec<Component>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkOutcome {
    pub passed: bool,
    pub map: LinkingMap,
    /// Positions `j` whose spot check failed.
    pub failures: Vec<usize>,
    pub residual: RudichBatch,
}

/// Runs one linking test between an `M`-pair batch and a `2M`-pair batch.
pub fn run_linking_test<P: LinkingProver + ?Sized, R: Rng + ?Sized>(
    prover: &mut P,
    old: &RudichBatch,
    new: &RudichBatch,
    rng: &mut R,
) -> Result<LinkOutcome, RudichError> {
    let m = old.len();
    if new.len() != 2 * m {
        return Err(RudichError::SizeMismatch {
            old: m,
            new: new.len(),
        });
    }
    let injection = sample_injection(m, 2 * m, rng);
    let declared = prover.declare(old, new, &injection);
    let spot_choices: Vec<Component> = (0..m).map(|_| Component::random(rng)).collect();
    let residual_idx = residual_indices(&injection, 2 * m);
    let residual = RudichBatch {
        pairs: residual_idx.iter().map(|&k| new.pairs[k]).collect(),
        handles: residual_idx
            .iter()
            .flat_map(|&k| [new.handles[2 * k], new.handles[2 * k + 1]])
            .collect(),
        target_bit: new.target_bit,
    };
    let relations = match declared {
        Some(r) if r.len() == m => r,
        _ => {
            return Ok(LinkOutcome {
                passed: false,
                map: LinkingMap {
                    injection,
                    relations: Vec::new(),
                    spot_choices,
                },
                failures: (0..m).collect(),
                residual,
            })
        }
    };
    let failures: Vec<usize> = (0..m)
        .filter(|&j| {
            let c = spot_choices[j];
            if !prover.consent_to_unveil(j, c) {
                return true;
            }
            let a = old.pairs[j].component(c);
            let b = new.pairs[injection[j]].component(c);
            !relations[j].holds_for(a, b)
        })
        .collect();
    Ok(LinkOutcome {
        passed: failures.is_empty(),
        map: LinkingMap {
            injection,
            relations,
            spot_choices,
        },
        failures,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effectiveness {
    Committed(u8),
    Uncommitted,
}

/// Effective commitment: all but `gamma_M` pairs of the batch encode one bit.
pub fn classify_effective(batch: &RudichBatch, form: BatchForm, params: &RudichParams) -> Effectiveness {
    let size = match form {
        BatchForm::First => params.m,
        BatchForm::Second => 2 * params.m,
    };
    let threshold = size.saturating_sub(params.gamma_m);
    for bit in 0..2 {
        if batch.count_encoding(bit) >= threshold {
            return Effectiveness::Committed(bit);
        }
    }
    Effectiveness::Uncommitted
}

/// All injections `{0..m} -> {0..n}` in lexicographic order.
pub fn all_injections(m: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(m, n, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(m, n, &mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Exact probability that a prover who declares optimally after seeing `f`
/// passes the linking test, by enumerating every injection, every
/// declaration vector and every spot-choice vector. Feasible for `M <= 4`.
pub fn exact_pass_probability(old: &[BitPair], new: &[BitPair]) -> BigRational {
    let m = old.len();
    assert_eq!(new.len(), 2 * m, "linking needs an M / 2M pair");
    let injections = all_injections(m, 2 * m);
    let mut best_total: u64 = 0;
    for f in &injections {
        let mut best = 0u64;
        for decl in 0..(1u32 << m) {
            let mut passes = 0u64;
            for spots in 0..(1u32 << m) {
                let ok = (0..m).all(|j| {
                    let rel = Relation::from_bit(((decl >> j) & 1) as u8);
                    let c = Component::from_bit(((spots >> j) & 1) as u8);
                    rel.holds_for(old[j].component(c), new[f[j]].component(c))
                });
                passes += ok as u64;
            }
            best = best.max(passes);
        }
        best_total += best;
    }
    let denom = injections.len() as u64 * (1u64 << m);
    BigRational::new(BigInt::from(best_total), BigInt::from(denom))
}

/// Shuffles pair positions; handy for placing flipped pairs at random.
pub fn shuffle_pairs<R: Rng + ?Sized>(pairs: &mut [BitPair], rng: &mut R) {
    pairs.shuffle(rng);
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};
    use proptest::prelude::*;
    use rand::rngs::mock::StepRng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::collections::BTreeMap;

    #[test]
    fn params_default_gamma() {
        let p = RudichParams::new(40).unwrap();
        assert_eq!(p.gamma_m(), 19);
        assert_eq!(RudichParams::new(1).unwrap().gamma_m(), 0);
        assert!(RudichParams::with_gamma(4, 2).is_err());
        assert!(RudichParams::new(0).is_err());
    }

    #[test]
    fn make_redundant_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = make_redundant(0, 50, &mut rng);
        assert!(batch.pairs.iter().all(|p| p.xor() == 0));
        assert_eq!(batch.handles.len(), 100);
        let mut zeros = StepRng::new(0, 0);
        let batch = make_redundant(1, 5, &mut zeros);
        assert!(batch.pairs.iter().all(|&p| p == BitPair(0, 1)));
    }

    #[test]
    fn independent_streams_are_uncorrelated() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        b.set_stream(1);
        let mut table = [[0f64; 2]; 2];
        let n = 10_000;
        for _ in 0..n {
            let x = make_redundant(1, 1, &mut a).pairs[0].0 as usize;
            let y = make_redundant(1, 1, &mut b).pairs[0].0 as usize;
            table[x][y] += 1.0;
        }
        let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
        let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
        let mut chi2 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let e = rows[i] * cols[j] / n as f64;
                chi2 += (table[i][j] - e).powi(2) / e;
            }
        }
        let crit = ChiSquared::new(1.0).unwrap().inverse_cdf(0.999);
        assert!(chi2 < crit, "chi2 = {chi2}");
    }

    #[test]
    fn relation_examples() {
        let old = RudichBatch::from_pairs(vec![BitPair(0, 1)], None);
        let equal = RudichBatch::from_pairs(vec![BitPair(0, 1), BitPair(1, 1)], None);
        assert_eq!(declare_relations(&old, &equal, &[0]).unwrap(), vec![Relation::Equal]);
        let opposite = RudichBatch::from_pairs(vec![BitPair(1, 0), BitPair(1, 1)], None);
        assert_eq!(declare_relations(&old, &opposite, &[0]).unwrap(), vec![Relation::Opposite]);
        let bad = RudichBatch::from_pairs(vec![BitPair(0, 0), BitPair(1, 1)], None);
        assert_eq!(declare_relations(&old, &bad, &[0]), Err(RudichError::NotLinkable { j: 0 }));
    }

    #[test]
    fn honest_linking_always_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..10_000 {
            let b = (trial % 2) as u8;
            let m = 40;
            let old = make_redundant(b, m, &mut rng);
            let new = make_redundant(b, 2 * m, &mut rng);
            let out = run_linking_test(&mut HonestProver, &old, &new, &mut rng).unwrap();
            assert!(out.passed);
            assert_eq!(out.residual.len(), m);
            assert!(out.residual.pairs.iter().all(|p| p.xor() == b));
        }
    }

    #[test]
    fn injections_are_uniform_and_injective() {
        assert_eq!(all_injections(2, 4).len(), 12);
        assert_eq!(all_injections(3, 6).len(), 120);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts: BTreeMap<Vec<usize>, u32> = BTreeMap::new();
        for _ in 0..12_000 {
            *counts.entry(sample_injection(2, 4, &mut rng)).or_default() += 1;
        }
        assert_eq!(counts.len(), 12);
        assert!(counts.values().all(|&c| (850..1150).contains(&c)));
        assert_eq!(residual_indices(&[3, 0], 4), vec![1, 2]);
    }

    #[test]
    fn mismatched_batches_at_m2_pass_three_quarters_of_the_time() {
        // both M pairs encode 0; one of the four new pairs encodes 1
        let old = [BitPair(0, 0), BitPair(1, 1)];
        let new = [BitPair(0, 0), BitPair(1, 1), BitPair(0, 1), BitPair(1, 1)];
        let p = exact_pass_probability(&old, &new);
        assert_eq!(p, BigRational::new(3.into(), 4.into()));
    }

    #[test]
    fn opposite_bits_m2_enumeration() {
        // b1 = 0 batch vs b2 = 1 batch: every couple mismatches
        let old = [BitPair(0, 0), BitPair(1, 1)];
        let new = [BitPair(0, 1), BitPair(1, 0), BitPair(0, 1), BitPair(1, 0)];
        assert_eq!(exact_pass_probability(&old, &new), BigRational::new(1.into(), 4.into()));
        let honest = [BitPair(0, 0), BitPair(1, 1), BitPair(1, 1), BitPair(0, 0)];
        assert!(exact_pass_probability(&old, &honest).is_one());
    }

    #[test]
    fn classify_examples() {
        let p5 = RudichParams::with_gamma(5, 2).unwrap();
        let all_one = RudichBatch::from_pairs(vec![BitPair(0, 1); 5], None);
        assert_eq!(classify_effective(&all_one, BatchForm::First, &p5), Effectiveness::Committed(1));
        let mut four_zero = vec![BitPair(1, 1); 4];
        four_zero.push(BitPair(0, 1));
        let b = RudichBatch::from_pairs(four_zero, None);
        assert_eq!(classify_effective(&b, BatchForm::First, &p5), Effectiveness::Committed(0));
        let p4 = RudichParams::with_gamma(4, 1).unwrap();
        let split = RudichBatch::from_pairs(vec![BitPair(0, 0), BitPair(1, 1), BitPair(0, 1), BitPair(1, 0)], None);
        assert_eq!(classify_effective(&split, BatchForm::First, &p4), Effectiveness::Uncommitted);
    }

    // Joint law of (relations, opened bits) for honest equal-bit batches is
    // the same for b = 0 and b = 1, over all of Alice's randomness.
    #[test]
    fn linking_dialogue_hides_the_bit() {
        let m = 2;
        let mut laws: Vec<BTreeMap<Vec<u8>, u32>> = Vec::new();
        for b in 0..2u8 {
            let mut law = BTreeMap::new();
            for old_bits in 0..(1u32 << m) {
                for new_bits in 0..(1u32 << (2 * m)) {
                    let old: Vec<_> = (0..m).map(|j| BitPair::encoding(((old_bits >> j) & 1) as u8, b)).collect();
                    let new: Vec<_> = (0..2 * m).map(|j| BitPair::encoding(((new_bits >> j) & 1) as u8, b)).collect();
                    let old = RudichBatch::from_pairs(old, Some(b));
                    let new = RudichBatch::from_pairs(new, Some(b));
                    for f in all_injections(m, 2 * m) {
                        let rel = declare_relations(&old, &new, &f).unwrap();
                        for spots in 0..(1u32 << m) {
                            let mut key: Vec<u8> = f.iter().map(|&x| x as u8).collect();
                            key.push(spots as u8);
                            for j in 0..m {
                                let c = Component::from_bit(((spots >> j) & 1) as u8);
                                key.push(rel[j].bit());
                                key.push(old.pairs[j].component(c));
                                key.push(new.pairs[f[j]].component(c));
                            }
                            *law.entry(key).or_insert(0) += 1;
                        }
                    }
                }
            }
            laws.push(law);
        }
        assert_eq!(laws[0], laws[1]);
    }

    fn lemma1_form(m: usize, g1: f64, g2: f64) -> f64 {
        0.5f64.powf(m as f64 * (g1 * (1.0 - g2) + g2 * (1.0 - g1)))
    }

    // Every XOR configuration that is not doubly effectively committed to one
    // bit passes with probability at most 4x the lemma-1 form.
    #[test]
    fn lemma1_envelope_small_m() {
        for m in 2..=4usize {
            let params = RudichParams::new(m).unwrap();
            for bad_old in 0..=m {
                for bad_new in 0..=2 * m {
                    let old: Vec<_> = (0..m).map(|j| BitPair::encoding(0, (j < bad_old) as u8)).collect();
                    let new: Vec<_> = (0..2 * m).map(|j| BitPair::encoding(0, (j < bad_new) as u8)).collect();
                    let ob = RudichBatch::from_pairs(old.clone(), None);
                    let nb = RudichBatch::from_pairs(new.clone(), None);
                    let doubly = matches!(
                        (classify_effective(&ob, BatchForm::First, &params), classify_effective(&nb, BatchForm::Second, &params)),
                        (Effectiveness::Committed(x), Effectiveness::Committed(y)) if x == y
                    );
                    if doubly {
                        continue;
                    }
                    let exact = exact_pass_probability(&old, &new);
                    let exact = num_traits::ToPrimitive::to_f64(&exact).unwrap();
                    let bound = lemma1_form(m, bad_old as f64 / m as f64, bad_new as f64 / (2 * m) as f64);
                    assert!(exact <= 4.0 * bound + 1e-12, "m={m} old={bad_old} new={bad_new}: {exact} > 4*{bound}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn residual_inherits_effective_commitment(m in 1usize..12, bad in 0usize..6, bits in proptest::collection::vec(0u8..2, 24), seed in any::<u64>()) {
            let params = RudichParams::new(m).unwrap();
            let bad = bad.min(params.gamma_m());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let new: Vec<_> = (0..2 * m).map(|j| BitPair::encoding(bits[j], (j < bad) as u8)).collect();
            let mut new = new;
            shuffle_pairs(&mut new, &mut rng);
            let nb = RudichBatch::from_pairs(new, None);
            prop_assert_eq!(classify_effective(&nb, BatchForm::Second, &params), Effectiveness::Committed(0));
            let old = make_redundant(0, m, &mut rng);
            let out = run_linking_test(&mut OptimalProver, &old, &nb, &mut rng).unwrap();
            prop_assert_eq!(classify_effective(&out.residual, BatchForm::First, &params), Effectiveness::Committed(0));
        }

        #[test]
        fn classification_is_exclusive(m in 1usize..20, bits in proptest::collection::vec((0u8..2, 0u8..2), 40)) {
            let params = RudichParams::new(m).unwrap();
            let pairs: Vec<_> = bits.iter().take(2 * m).map(|&(a, b)| BitPair(a, b)).collect();
            let batch = RudichBatch::from_pairs(pairs, None);
            let thr = 2 * m - params.gamma_m();
            let both = batch.count_encoding(0) >= thr && batch.count_encoding(1) >= thr;
            prop_assert!(!both);
        }
    }

    #[test]
    fn refusal_fails() {
        struct Refuser;
        impl LinkingProver for Refuser {
            fn declare(&mut self, _: &RudichBatch, _: &RudichBatch, _: &[usize]) -> Option<Vec<Relation>> {
                None
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let old = make_redundant(0, 3, &mut rng);
        let new = make_redundant(0, 6, &mut rng);
        assert!(!run_linking_test(&mut Refuser, &old, &new, &mut rng).unwrap().passed);
        assert!(!BigRational::zero().is_one());
    }
}
