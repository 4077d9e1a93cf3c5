//! Alice-side strategies and a Monte Carlo harness for detection rates.

use crate::bounds::flip_count;
use crate::protocol::{run_rbc2, BatchContext, Message, MsgKind, ProtocolError, SessionConfig, SessionStatus, Strategy, Tag};
use crate::rudich::{residual_indices, BitPair};
use crate::spacetime::RegionId;
use rand::seq::index::sample;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Follows the protocol.
#[derive(Debug, Clone, Copy, Default)]
pub struct Honest;

/// Commits `b` honestly in `P1`, then puts `floor((2M - 1)/4) + 1` pairs
/// encoding the other bit into the batch made in `P2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct OptimalFlip;

/// First batch pairs encode independent random bits.
#[derive(Debug, Clone, Copy, Default)]
pub struct Uncommitted;

fn honest_batch(ctx: &BatchContext<'_>, bit_of: impl Fn(usize) -> u8) -> Vec<BitPair> {
    (0..ctx.size)
        .map(|j| BitPair::encoding(ctx.tape.pair_bit(ctx.round, j), bit_of(j)))
        .collect()
}

impl Strategy for Honest {
    fn name(&self) -> &str {
        "honest"
    }

    fn batch_bits(&self, ctx: &BatchContext<'_>) -> Vec<BitPair> {
        honest_batch(ctx, |_| ctx.bit)
    }
}

impl Strategy for OptimalFlip {
    fn name(&self) -> &str {
        "flip"
    }

    fn batch_bits(&self, ctx: &BatchContext<'_>) -> Vec<BitPair> {
        if ctx.round != 2 {
            return honest_batch(ctx, |_| ctx.bit);
        }
        let mut rng = ctx.tape.rng(Tag::Strategy { round: 2, index: 0 });
        let flipped = sample(&mut rng, ctx.size, flip_count(ctx.m as u64) as usize).into_vec();
        honest_batch(ctx, |j| ctx.bit ^ flipped.contains(&j) as u8)
    }
}

impl Strategy for Uncommitted {
    fn name(&self) -> &str {
        "uncommitted"
    }

    fn batch_bits(&self, ctx: &BatchContext<'_>) -> Vec<BitPair> {
        if ctx.round != 1 {
            return honest_batch(ctx, |_| ctx.bit);
        }
        honest_batch(ctx, |j| ctx.tape.bit(Tag::Strategy { round: 1, index: j as u32 }))
    }
}

pub const STRATEGY_NAMES: [&str; 3] = ["honest", "flip", "uncommitted"];

pub fn strategy_by_name(name: &str) -> Option<Box<dyn Strategy>> {
    match name {
        "honest" => Some(Box::new(Honest)),
        "flip" => Some(Box::new(OptimalFlip)),
        "uncommitted" => Some(Box::new(Uncommitted)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DetectionStats {
    pub trials: u64,
    pub caught: u64,
    /// Escaped, holding a residual that unveils the other bit.
    pub escaped_with_flip: u64,
    pub escaped_consistent: u64,
    /// Region index of the failing check; 0 for causality or encoding faults.
    pub failures_by_region: BTreeMap<u32, u64>,
}

impl DetectionStats {
    pub fn escaped(&self) -> u64 {
        self.escaped_with_flip + self.escaped_consistent
    }

    pub fn escape_rate(&self) -> f64 {
        self.escaped() as f64 / self.trials.max(1) as f64
    }

    pub fn detection_rate(&self) -> f64 {
        self.caught as f64 / self.trials.max(1) as f64
    }

    /// Binomial standard error of the escape rate.
    pub fn sigma(&self) -> f64 {
        let p = self.escape_rate();
        (p * (1.0 - p) / self.trials.max(1) as f64).sqrt()
    }

    pub fn escape_interval(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.escaped(), self.trials, z)
    }

    fn add(&mut self, t: &TrialResult) {
        self.trials += 1;
        match t {
            TrialResult::Caught(region) => {
                self.caught += 1;
                *self.failures_by_region.entry(*region).or_default() += 1;
            }
            TrialResult::EscapedWithFlip => self.escaped_with_flip += 1,
            TrialResult::EscapedConsistent => self.escaped_consistent += 1,
        }
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

enum TrialResult {
    Caught(u32),
    EscapedWithFlip,
    EscapedConsistent,
}

pub fn trial_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

fn run_trial(strategy: &dyn Strategy, base: &SessionConfig, seed: u64) -> Result<TrialResult, ProtocolError> {
    let mut cfg = base.clone();
    cfg.seed = seed;
    cfg.strategy = strategy.name().to_string();
    let bit = (seed >> 63) as u8;
    let run = run_rbc2(&cfg, strategy, bit)?;
    let report = &run.outcome.report;
    if run.outcome.is_aborted() {
        return Ok(TrialResult::Caught(report.failed_region().unwrap_or(0)));
    }
    let flipped = match run.outcome.status {
        SessionStatus::Unveiled(b) => b != bit,
        _ => {
            let alice = &run.alice;
            alice.batches.iter().next_back().is_some_and(|(&k, batch)| {
                let res = if k == 1 {
                    Some((0..batch.len()).collect::<Vec<_>>())
                } else {
                    match alice.get(MsgKind::LinkQuery, RegionId::p(k)) {
                        Some(Message::LinkQuery { injection, .. }) => Some(residual_indices(injection, batch.len())),
                        _ => None,
                    }
                };
                res.is_some_and(|res| res.iter().all(|&j| batch[j].xor() != bit))
            })
        }
    };
    Ok(if flipped {
        TrialResult::EscapedWithFlip
    } else {
        TrialResult::EscapedConsistent
    })
}

/// Runs `trials` independent sessions of `base` with per-trial seeds derived
/// from `seed`; results are merged in trial order.
pub fn run_trials(strategy: &dyn Strategy, base: &SessionConfig, trials: u64, seed: u64) -> Result<DetectionStats, ProtocolError> {
    base.validate()?;
    let results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(strategy, base, trial_seed(seed, i)))
        .collect::<Result<_, _>>()?;
    let mut stats = DetectionStats::default();
    for r in &results {
        stats.add(r);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::AliceTape;
    use crate::protocol::KnowledgeView;

    fn ctx<'a>(tape: &'a AliceTape, round: u32, size: usize, m: usize) -> BatchContext<'a> {
        BatchContext {
            round,
            size,
            bit: 0,
            m,
            tape,
            knowledge: KnowledgeView::new(0, &[], &[]),
        }
    }

    #[test]
    fn flip_counts() {
        let tape = AliceTape::new(1, 4);
        for (m, want) in [(8usize, 4usize), (7, 4), (2, 1)] {
            let b = OptimalFlip.batch_bits(&ctx(&tape, 2, 2 * m, m));
            assert_eq!(b.iter().filter(|p| p.xor() == 1).count(), want);
            let first = OptimalFlip.batch_bits(&ctx(&tape, 1, m, m));
            assert!(first.iter().all(|p| p.xor() == 0));
        }
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
        let (lo, _) = wilson_interval(0, 10, 1.96);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn names_resolve() {
        for n in STRATEGY_NAMES {
            assert_eq!(strategy_by_name(n).unwrap().name(), n);
        }
        assert!(strategy_by_name("nope").is_none());
    }
}
