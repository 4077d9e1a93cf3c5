//! Alice's decision hooks and the knowledge they may consult.

use super::message::{Message, MsgKind};
use super::tape::AliceTape;
use crate::rudich::{best_declaration, BitPair, Relation};
use crate::spacetime::{RegionId, SpacetimeEvent, Time};

/// One record an agent holds, stamped with when and where it arrived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnowledgeEntry {
    pub acquired: SpacetimeEvent,
    pub kind: MsgKind,
    pub region: Option<RegionId>,
    pub seq: u64,
}

/// The part of an agent's knowledge acquired no later than `now`.
#[derive(Debug, Clone, Copy)]
pub struct KnowledgeView<'a> {
    now: Time,
    entries: &'a [KnowledgeEntry],
    messages: &'a [Message],
}

impl<'a> KnowledgeView<'a> {
    /// `entries` must be sorted by acquisition time.
    pub fn new(now: Time, entries: &'a [KnowledgeEntry], messages: &'a [Message]) -> Self {
        let cut = entries.partition_point(|e| e.acquired.time <= now);
        KnowledgeView {
            now,
            entries: &entries[..cut],
            messages,
        }
    }

    pub fn now(&self) -> Time {
        self.now
    }

    pub fn entries(&self) -> &'a [KnowledgeEntry] {
        self.entries
    }

    pub fn find(&self, kind: MsgKind, region: RegionId) -> Option<&'a Message> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.kind == kind && e.region == Some(region))
            .map(|e| &self.messages[e.seq as usize])
    }

    pub fn injection(&self, region: RegionId) -> Option<&'a [usize]> {
        match self.find(MsgKind::LinkQuery, region)? {
            Message::LinkQuery { injection, .. } => Some(injection),
            _ => None,
        }
    }
}

pub struct BatchContext<'a> {
    /// `k` of the region `P_k` making the batch.
    pub round: u32,
    pub size: usize,
    pub bit: u8,
    /// `M`.
    pub m: usize,
    pub tape: &'a AliceTape,
    pub knowledge: KnowledgeView<'a>,
}

pub struct DeclareContext<'a> {
    pub round: u32,
    pub old: &'a [BitPair],
    pub new: &'a [BitPair],
    pub injection: &'a [usize],
    pub tape: &'a AliceTape,
    pub knowledge: KnowledgeView<'a>,
}

/// Alice's choices. Openings are always honest: the elementary layer is
/// perfectly binding, so misreporting randomness only ever fails.
pub trait Strategy: Send + Sync {
    fn name(&self) -> &str;

    /// Bit pairs for the batch made in `P_round`.
    fn batch_bits(&self, ctx: &BatchContext<'_>) -> Vec<BitPair>;

    /// Relations for each linked couple.
    fn declare(&self, ctx: &DeclareContext<'_>) -> Vec<Relation> {
        ctx.injection
            .iter()
            .enumerate()
            .map(|(j, &f)| best_declaration(ctx.old[j], ctx.new[f]))
            .collect()
    }
}
