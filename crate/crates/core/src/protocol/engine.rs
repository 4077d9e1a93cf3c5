//! Single-threaded event loop driving the four agents.
//!
//! Events are region openings and message arrivals, processed in
//! `(time, class, id)` order. Every handler reads only what its agent had
//! acquired by the event time.

use super::message::{Message, MsgKind};
use super::strategy::{BatchContext, DeclareContext, KnowledgeEntry, KnowledgeView, Strategy};
use super::tape::{bob_rng, AliceTape, B1_STREAM, B2_STREAM};
use super::transcript::{Record, Transcript};
use super::verify::{first_failure, verify_with, BobView};
use super::{Agent, ProtocolError, ProtocolKind, SessionConfig, SessionOutcome};
use crate::elementary::{commit_reply, ChallengePair};
use crate::rudich::{residual_indices, sample_injection, BitPair, Component};
use crate::spacetime::{RegionId, SpacetimeEvent, Time, Transport};
use rand_chacha::ChaCha8Rng;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

/// Everything A1 and A2 know once they pool their records.
#[derive(Debug, Clone)]
pub struct AliceView {
    pub config: SessionConfig,
    pub tape: AliceTape,
    pub bit: u8,
    /// Bit pairs of the batch made in each `P_k`.
    pub batches: BTreeMap<u32, Vec<BitPair>>,
    pub messages: BTreeMap<(MsgKind, RegionId), Message>,
    pub unveiled: bool,
}

impl AliceView {
    pub fn get(&self, kind: MsgKind, region: RegionId) -> Option<&Message> {
        self.messages.get(&(kind, region))
    }
}

#[derive(Debug, Clone)]
pub struct SessionRun {
    pub transcript: Transcript,
    pub outcome: SessionOutcome,
    pub alice: AliceView,
}

pub fn run_rbc2(cfg: &SessionConfig, strategy: &dyn Strategy, bit: u8) -> Result<SessionRun, ProtocolError> {
    let tape = AliceTape::new(cfg.seed, cfg.params.modulus());
    run_session(cfg, strategy, bit, tape)
}

pub fn run_rbc1(cfg: &SessionConfig, bit: u8) -> Result<SessionRun, ProtocolError> {
    let tape = AliceTape::new(cfg.seed, cfg.params.modulus());
    run_session(cfg, &RbcOneHonest, bit, tape)
}

struct RbcOneHonest;

impl Strategy for RbcOneHonest {
    fn name(&self) -> &str {
        "honest"
    }

    fn batch_bits(&self, _: &BatchContext<'_>) -> Vec<BitPair> {
        Vec::new()
    }
}

/// Runs a session with an explicit tape, so callers can pin Alice's randomness.
pub fn run_session(
    cfg: &SessionConfig,
    strategy: &dyn Strategy,
    bit: u8,
    tape: AliceTape,
) -> Result<SessionRun, ProtocolError> {
    cfg.validate()?;
    let mut engine = Engine {
        cfg,
        strategy,
        bit,
        tape,
        transport: Transport::new(cfg.geometry),
        b_rng: [bob_rng(cfg.seed, B1_STREAM), bob_rng(cfg.seed, B2_STREAM)],
        queue: BinaryHeap::new(),
        records: Vec::new(),
        messages: Vec::new(),
        knowledge: Default::default(),
        batches: BTreeMap::new(),
        bob_aborted: [false; 2],
        bob_passed: Default::default(),
        challenged: 0,
        unveiled: false,
    };
    engine.run()?;
    Ok(engine.finish())
}

const REGION_START: u8 = 0;
const DELIVERY: u8 = 1;

struct Engine<'a> {
    cfg: &'a SessionConfig,
    strategy: &'a dyn Strategy,
    bit: u8,
    tape: AliceTape,
    transport: Transport,
    b_rng: [ChaCha8Rng; 2],
    queue: BinaryHeap<Reverse<(Time, u8, u64)>>,
    /// Indexed by seq.
    records: Vec<Record>,
    messages: Vec<Message>,
    knowledge: [Vec<KnowledgeEntry>; 4],
    batches: BTreeMap<u32, Vec<BitPair>>,
    bob_aborted: [bool; 2],
    bob_passed: [Vec<u32>; 2],
    challenged: u32,
    unveiled: bool,
}

fn slot(a: Agent) -> usize {
    match a {
        Agent::A1 => 0,
        Agent::A2 => 1,
        Agent::B1 => 2,
        Agent::B2 => 3,
    }
}

fn bob_slot(a: Agent) -> usize {
    slot(a) - 2
}

impl<'a> Engine<'a> {
    fn run(&mut self) -> Result<(), ProtocolError> {
        let schedule = self.cfg.schedule()?;
        for r in 1..=self.cfg.last_region() {
            let start = schedule.start(RegionId(r)).expect("schedule covers every region");
            self.queue.push(Reverse((start, REGION_START, r as u64)));
        }
        while let Some(Reverse((time, class, id))) = self.queue.pop() {
            match class {
                REGION_START => self.region_start(RegionId(id as u32), time),
                _ => self.deliver(id, time),
            }
        }
        Ok(())
    }

    fn finish(self) -> SessionRun {
        let transcript = Transcript::new(self.cfg.clone(), self.records);
        let report = verify_with(&transcript, &self.messages, Vec::new());
        let outcome = SessionOutcome {
            status: report.status(),
            rounds_completed: self.challenged,
            report,
        };
        let mut pooled = BTreeMap::new();
        for e in self.knowledge[0].iter().chain(&self.knowledge[1]) {
            if let Some(region) = e.region {
                pooled
                    .entry((e.kind, region))
                    .or_insert_with(|| self.messages[e.seq as usize].clone());
            }
        }
        let alice = AliceView {
            config: self.cfg.clone(),
            tape: self.tape,
            bit: self.bit,
            batches: self.batches,
            messages: pooled,
            unveiled: self.unveiled,
        };
        SessionRun {
            transcript,
            outcome,
            alice,
        }
    }

    fn send(&mut self, from: Agent, to: Agent, time: Time, region: Option<RegionId>, msg: Message) {
        let g = self.cfg.geometry;
        let env = self
            .transport
            .deliver(from, from.site(), to, g.site_center(to.site()), time, g.site_center(from.site()), ())
            .expect("agents emit from their site centres");
        let bits = msg.encode(self.cfg);
        let seq = env.seq();
        debug_assert_eq!(seq as usize, self.records.len());
        self.records.push(Record {
            seq,
            sender: from,
            receiver: to,
            emit: env.emit,
            receive: env.receive,
            kind: msg.kind(),
            region,
            bit_size: bits.len() as u64,
            payload: bits.into_vec(),
        });
        self.messages.push(msg);
        self.learn(from, seq, env.emit);
        self.queue.push(Reverse((env.receive.time, DELIVERY, seq)));
        if from.is_bob() && !to.is_bob() {
            self.forward(from, seq, time);
        }
    }

    fn forward(&mut self, bob: Agent, seq: u64, time: Time) {
        let partner = Agent::bob_at(bob.site().other());
        self.send(bob, partner, time, None, Message::Forward(seq));
    }

    fn learn(&mut self, agent: Agent, seq: u64, acquired: SpacetimeEvent) {
        let r = &self.records[seq as usize];
        self.knowledge[slot(agent)].push(KnowledgeEntry {
            acquired,
            kind: r.kind,
            region: r.region,
            seq,
        });
    }

    fn view(&self, agent: Agent, now: Time) -> KnowledgeView<'_> {
        KnowledgeView::new(now, &self.knowledge[slot(agent)], &self.messages)
    }

    fn deliver(&mut self, seq: u64, now: Time) {
        let (sender, receiver, kind, region, receive) = {
            let r = &self.records[seq as usize];
            (r.sender, r.receiver, r.kind, r.region, r.receive)
        };
        self.learn(receiver, seq, receive);
        if kind == MsgKind::Forward {
            if let Message::Forward(orig) = self.messages[seq as usize] {
                self.learn(receiver, orig, receive);
            }
            return;
        }
        if receiver.is_bob() && !sender.is_bob() {
            self.forward(receiver, seq, now);
        }
        let Some(region) = region else { return };
        match (self.cfg.kind, receiver, kind) {
            (ProtocolKind::Rbc1, Agent::A1 | Agent::A2, MsgKind::Challenge) => self.rbc1_challenge(receiver, seq, region, now),
            (ProtocolKind::Rbc2, Agent::A1, MsgKind::Challenge) => self.a1_challenge(seq, region, now),
            (ProtocolKind::Rbc2, Agent::A2, MsgKind::Challenge) => self.a2_challenge(seq, region, now),
            (ProtocolKind::Rbc2, Agent::A1, MsgKind::LinkQuery) => self.a1_declare(region, now),
            (ProtocolKind::Rbc2, Agent::A1, MsgKind::SpotChoices) => self.a1_open(seq, region, now),
            (ProtocolKind::Rbc2, Agent::B1, MsgKind::Reply) if region.is_p() && region.round() >= 2 => {
                let m = self.cfg.m();
                let injection = sample_injection(m, 2 * m, &mut self.b_rng[0]);
                let msg = Message::LinkQuery {
                    injection,
                    mask: vec![true; m],
                };
                self.send(Agent::B1, Agent::A1, now, Some(region), msg);
            }
            (ProtocolKind::Rbc2, Agent::B1, MsgKind::Relations) => {
                let spots = (0..self.cfg.m()).map(|_| Component::random(&mut self.b_rng[0])).collect();
                self.send(Agent::B1, Agent::A1, now, Some(region), Message::SpotChoices(spots));
            }
            _ => {}
        }
    }

    fn region_start(&mut self, region: RegionId, now: Time) {
        let bob = Agent::bob_at(region.site());
        let b = bob_slot(bob);
        if self.cfg.kind == ProtocolKind::Rbc2 && !self.bob_aborted[b] {
            let view = BobView::from_entries(bob, &self.knowledge[slot(bob)], &self.messages);
            let mut passed = std::mem::take(&mut self.bob_passed[b]);
            self.bob_aborted[b] = first_failure(&view, self.cfg, &mut passed).is_some();
            self.bob_passed[b] = passed;
        }
        if self.bob_aborted[b] {
            return;
        }
        let n = self.cfg.challenge_len(region);
        let params = self.cfg.params;
        let pairs = (0..n)
            .map(|i| ChallengePair::random(i as u64, &params, &mut self.b_rng[b]))
            .collect();
        self.challenged += 1;
        self.send(bob, Agent::alice_at(region.site()), now, Some(region), Message::Challenge(pairs));
    }

    fn challenge_pairs(&self, seq: u64) -> Vec<ChallengePair> {
        match &self.messages[seq as usize] {
            Message::Challenge(p) => p.clone(),
            _ => Vec::new(),
        }
    }

    /// Pair indices of the batch made in `P_k` left after its linking, as known to A1 by `now`.
    fn residual(&self, k: u32, now: Time) -> Option<Vec<usize>> {
        if k == 1 {
            return Some((0..self.cfg.m()).collect());
        }
        let f = self.view(Agent::A1, now).injection(RegionId::p(k))?;
        Some(residual_indices(f, 2 * self.cfg.m()))
    }

    fn unveil(&mut self, from: Agent, region: RegionId, now: Time, values: Vec<u64>) {
        self.unveiled = true;
        self.send(from, Agent::bob_at(from.site()), now, Some(region), Message::Unveil(values));
    }

    fn a1_challenge(&mut self, seq: u64, region: RegionId, now: Time) {
        let k = region.round();
        let w = self.cfg.digits();
        if self.cfg.unveil_at == Some(region.0) && k >= 2 {
            let Some(res) = self.residual(k - 1, now) else { return };
            let values = res
                .iter()
                .flat_map(|&j| (0..2).flat_map(move |c| (0..w).map(move |d| (2 * j + c, d))))
                .map(|(e, d)| self.tape.child_random(k - 1, e, d))
                .collect();
            self.unveil(Agent::A1, region, now, values);
            return;
        }
        let pairs = self.challenge_pairs(seq);
        let ctx = BatchContext {
            round: k,
            size: self.cfg.batch_pairs(k),
            bit: self.bit,
            m: self.cfg.m(),
            tape: &self.tape,
            knowledge: self.view(Agent::A1, now),
        };
        let batch = self.strategy.batch_bits(&ctx);
        assert_eq!(batch.len(), ctx.size, "strategy returned a batch of the wrong size");
        let replies = (0..2 * batch.len())
            .map(|e| {
                let v = batch[e / 2].component(Component::from_bit((e % 2) as u8));
                commit_reply(v, &pairs[e], self.tape.root_random(k, e), &self.cfg.params)
            })
            .collect();
        self.batches.insert(k, batch);
        self.send(Agent::A1, Agent::B1, now, Some(region), Message::Reply(replies));
        if self.cfg.unveil_at == Some(1) && k == 1 {
            let values = (0..self.cfg.batch_elems(1))
                .flat_map(|e| (0..w).map(move |d| (e, d)))
                .map(|(e, d)| self.tape.child_random(1, e, d))
                .collect();
            self.unveil(Agent::A1, region, now, values);
        }
    }

    fn a2_challenge(&mut self, seq: u64, region: RegionId, now: Time) {
        let k = region.round();
        let w = self.cfg.digits();
        let pairs = self.challenge_pairs(seq);
        let elems = self.cfg.batch_elems(k);
        let replies = (0..elems)
            .flat_map(|e| (0..w).map(move |d| (e, d)))
            .map(|(e, d)| {
                let digit = ((self.tape.root_random(k, e) >> d) & 1) as u8;
                commit_reply(digit, &pairs[e * w + d], self.tape.child_random(k, e, d), &self.cfg.params)
            })
            .collect();
        self.send(Agent::A2, Agent::B2, now, Some(region), Message::Reply(replies));
        if self.cfg.unveil_at == Some(region.0) {
            let values = (0..elems).map(|e| self.tape.root_random(k, e)).collect();
            self.unveil(Agent::A2, region, now, values);
        }
    }

    fn a1_declare(&mut self, region: RegionId, now: Time) {
        let k = region.round();
        let (Some(res), Some(old_batch), Some(new)) = (self.residual(k - 1, now), self.batches.get(&(k - 1)), self.batches.get(&k))
        else {
            return;
        };
        let old: Vec<BitPair> = res.iter().map(|&j| old_batch[j]).collect();
        let view = self.view(Agent::A1, now);
        let Some(injection) = view.injection(region) else { return };
        let ctx = DeclareContext {
            round: k,
            old: &old,
            new,
            injection,
            tape: &self.tape,
            knowledge: view,
        };
        let relations = self.strategy.declare(&ctx);
        self.send(Agent::A1, Agent::B1, now, Some(region), Message::Relations(relations));
    }

    fn a1_open(&mut self, seq: u64, region: RegionId, now: Time) {
        let k = region.round();
        let w = self.cfg.digits();
        let Message::SpotChoices(spots) = self.messages[seq as usize].clone() else { return };
        let Some(res) = self.residual(k - 1, now) else { return };
        let Some(f) = self.view(Agent::A1, now).injection(region).map(<[usize]>::to_vec) else { return };
        let mut values = Vec::with_capacity(2 * f.len() * w);
        for (j, c) in spots.iter().enumerate() {
            let e = 2 * res[j] + c.index();
            values.extend((0..w).map(|d| self.tape.child_random(k - 1, e, d)));
        }
        for (j, c) in spots.iter().enumerate() {
            let e = 2 * f[j] + c.index();
            values.extend((0..w).map(|d| self.tape.child_random(k, e, d)));
        }
        self.send(Agent::A1, Agent::B1, now, Some(region), Message::LinkOpen(values));
    }

    fn rbc1_challenge(&mut self, alice: Agent, seq: u64, region: RegionId, now: Time) {
        let r = region.0;
        let w = self.cfg.digits() as u64;
        if self.cfg.unveil_at == Some(r) && r >= 2 {
            let values = (0..self.cfg.rbc1_level_size(r - 1))
                .map(|i| self.tape.level_random(r - 1, i))
                .collect();
            self.unveil(alice, region, now, values);
            return;
        }
        let pairs = self.challenge_pairs(seq);
        let replies = (0..pairs.len() as u64)
            .map(|i| {
                let v = if r == 1 {
                    self.bit
                } else {
                    ((self.tape.level_random(r - 1, i / w) >> (i % w)) & 1) as u8
                };
                commit_reply(v, &pairs[i as usize], self.tape.level_random(r, i), &self.cfg.params)
            })
            .collect();
        self.send(alice, Agent::bob_at(alice.site()), now, Some(region), Message::Reply(replies));
        if r == 1 && self.cfg.unveil_at == Some(1) {
            let values = (0..w).map(|i| self.tape.level_random(2, i)).collect();
            self.unveil(alice, region, now, values);
        }
    }
}
