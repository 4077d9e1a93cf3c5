//! Alice's shared random string.
//!
//! Every value is drawn from its own ChaCha stream keyed by a tag, so A1 and
//! A2 agree on any value without talking and the draw order never matters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    /// First component of pair `pair` in the batch made in `P_round`.
    PairBit { round: u32, pair: u32 },
    /// Randomness of elementary `elem` committed in `P_round`.
    RootRandom { round: u32, elem: u32 },
    /// Randomness committing digit `digit` of that root, used in `Q_round`.
    ChildRandom { round: u32, elem: u32, digit: u32 },
    /// RBC1 randomness of commitment `index` at `level`.
    Level { level: u32, index: u32 },
    /// Strategy-private draws.
    Strategy { round: u32, index: u32 },
}

impl Tag {
    fn stream(self) -> u64 {
        let pack = |kind: u64, a: u32, b: u32, c: u32| {
            (kind << 60) | ((a as u64 & 0xfff) << 48) | ((b as u64 & 0xff_ffff) << 24) | (c as u64 & 0xff_ffff)
        };
        match self {
            Tag::PairBit { round, pair } => pack(1, round, pair, 0),
            Tag::RootRandom { round, elem } => pack(2, round, elem, 0),
            Tag::ChildRandom { round, elem, digit } => pack(3, round, elem, digit),
            Tag::Level { level, index } => pack(4, level, index, 0),
            Tag::Strategy { round, index } => pack(5, round, index, 0),
        }
    }
}

/// Stream ids reserved for Bob's agents.
pub(crate) const B1_STREAM: u64 = 0xB << 60;
pub(crate) const B2_STREAM: u64 = 0xC << 60;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliceTape {
    seed: u64,
    modulus: u64,
    overrides: HashMap<Tag, u64>,
}

impl AliceTape {
    pub fn new(seed: u64, modulus: u64) -> Self {
        AliceTape {
            seed,
            modulus,
            overrides: HashMap::new(),
        }
    }

    /// Pins `tag` to `value`; used to enumerate Alice's randomness exhaustively.
    pub fn set_override(&mut self, tag: Tag, value: u64) {
        self.overrides.insert(tag, value);
    }

    pub fn rng(&self, tag: Tag) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(tag.stream());
        rng
    }

    pub fn bit(&self, tag: Tag) -> u8 {
        match self.overrides.get(&tag) {
            Some(&v) => (v & 1) as u8,
            None => self.rng(tag).gen_range(0..2),
        }
    }

    /// Uniform in `[0, N)`.
    pub fn random(&self, tag: Tag) -> u64 {
        match self.overrides.get(&tag) {
            Some(&v) => v % self.modulus,
            None => self.rng(tag).gen_range(0..self.modulus),
        }
    }

    pub fn root_random(&self, round: u32, elem: usize) -> u64 {
        self.random(Tag::RootRandom { round, elem: elem as u32 })
    }

    pub fn child_random(&self, round: u32, elem: usize, digit: usize) -> u64 {
        self.random(Tag::ChildRandom {
            round,
            elem: elem as u32,
            digit: digit as u32,
        })
    }

    pub fn pair_bit(&self, round: u32, pair: usize) -> u8 {
        self.bit(Tag::PairBit { round, pair: pair as u32 })
    }

    pub fn level_random(&self, level: u32, index: u64) -> u64 {
        self.random(Tag::Level {
            level,
            index: index as u32,
        })
    }
}

pub(crate) fn bob_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
