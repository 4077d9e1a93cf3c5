//! Bob's checks.
//!
//! A Bob agent can only judge what has physically reached it. `BobView`
//! holds every record the agent sent, received or had forwarded to it, with
//! the time it became available; a check is decided at the latest of those
//! times, or stays incomplete while an input is missing.

use super::message::{Message, MsgKind};
use super::strategy::KnowledgeEntry;
use super::transcript::{forwarded_seq, Record, Transcript};
use super::{Agent, ProtocolKind, SessionConfig, SessionStatus};
use crate::elementary::{from_digits, open_commitment, verify_chain, ChainVerdict, ChallengePair};
use crate::rudich::residual_indices;
use crate::spacetime::{
    independence_check, verify_transcript_causality, Position, RegionId, Site, SpacetimeEvent, Time, Violation,
};
use bitvec::prelude::*;
use std::collections::{BTreeMap, HashMap};

pub(crate) trait MessageLookup {
    fn message(&self, seq: u64) -> Option<&Message>;
}

impl MessageLookup for Vec<Message> {
    fn message(&self, seq: u64) -> Option<&Message> {
        self.get(seq as usize)
    }
}

impl MessageLookup for BTreeMap<u64, Message> {
    fn message(&self, seq: u64) -> Option<&Message> {
        self.get(&seq)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckStatus {
    Incomplete,
    Pass { at: Time },
    Fail { at: Time, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnveilVerdict {
    Accept(u8),
    Reject(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerificationEvent {
    pub agent: Agent,
    pub time: Time,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    /// Linking check of each `P_k`, as judged by the agent holding all inputs.
    pub link_checks: Vec<(u32, CheckStatus)>,
    pub unveil: Option<UnveilVerdict>,
    pub event: Option<VerificationEvent>,
    pub violations: Vec<Violation>,
    pub decode_errors: Vec<String>,
}

impl VerificationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
            && self.decode_errors.is_empty()
            && !self.link_checks.iter().any(|(_, s)| matches!(s, CheckStatus::Fail { .. }))
            && !matches!(self.unveil, Some(UnveilVerdict::Reject(_)))
    }

    /// Region index of the first failing check, if any.
    pub fn failed_region(&self) -> Option<u32> {
        if !self.violations.is_empty() || !self.decode_errors.is_empty() {
            return Some(0);
        }
        if let Some((k, _)) = self.link_checks.iter().find(|(_, s)| matches!(s, CheckStatus::Fail { .. })) {
            return Some(RegionId::p(*k).0);
        }
        None
    }

    pub fn status(&self) -> SessionStatus {
        if let Some(v) = self.violations.first() {
            return SessionStatus::Aborted(format!("causality: {v}"));
        }
        if let Some(e) = self.decode_errors.first() {
            return SessionStatus::Aborted(format!("malformed: {e}"));
        }
        for (k, s) in &self.link_checks {
            if let CheckStatus::Fail { reason, .. } = s {
                return SessionStatus::Aborted(format!("linking in {}: {reason}", RegionId::p(*k)));
            }
        }
        match &self.unveil {
            Some(UnveilVerdict::Accept(b)) => SessionStatus::Unveiled(*b),
            Some(UnveilVerdict::Reject(r)) => SessionStatus::Aborted(format!("unveiling rejected: {r}")),
            None => SessionStatus::Sustained,
        }
    }
}

/// What one Bob agent holds, keyed by message kind and region.
pub struct BobView<'a> {
    pub agent: Agent,
    entries: HashMap<(MsgKind, RegionId), (Time, &'a Message)>,
}

impl<'a> BobView<'a> {
    pub(crate) fn from_entries<L: MessageLookup + ?Sized>(agent: Agent, entries: &[KnowledgeEntry], lookup: &'a L) -> Self {
        let mut map = HashMap::new();
        for e in entries {
            let (Some(region), Some(msg)) = (e.region, lookup.message(e.seq)) else {
                continue;
            };
            map.entry((e.kind, region)).or_insert((e.acquired.time, msg));
        }
        BobView { agent, entries: map }
    }

    fn get(&self, kind: MsgKind, region: RegionId) -> Option<(Time, &'a Message)> {
        self.entries.get(&(kind, region)).copied()
    }

    pub fn has(&self, kind: MsgKind, region: RegionId) -> bool {
        self.entries.contains_key(&(kind, region))
    }
}

/// Knowledge entries of `agent` reconstructed from a transcript.
pub(crate) fn bob_entries(transcript: &Transcript, agent: Agent) -> Vec<KnowledgeEntry> {
    let by_seq = transcript.by_seq();
    let mut out = Vec::new();
    for r in &transcript.records {
        if r.is_protocol() && r.sender == agent {
            out.push(entry(r, r.emit));
        } else if r.is_protocol() && r.receiver == agent {
            out.push(entry(r, r.receive));
        } else if r.kind == MsgKind::Forward && r.receiver == agent {
            if let Some(orig) = forwarded_seq(r).and_then(|s| by_seq.get(&s)) {
                out.push(entry(orig, r.receive));
            }
        }
    }
    out.sort_by_key(|e| (e.acquired.time, e.seq));
    out
}

fn entry(r: &Record, acquired: SpacetimeEvent) -> KnowledgeEntry {
    KnowledgeEntry {
        acquired,
        kind: r.kind,
        region: r.region,
        seq: r.seq,
    }
}

/// Decodes every record's payload with the session's encoding rules.
pub fn decoded_messages(transcript: &Transcript) -> (BTreeMap<u64, Message>, Vec<String>) {
    let mut msgs = BTreeMap::new();
    let mut errors = Vec::new();
    for r in &transcript.records {
        let bits = BitSlice::<u8, Msb0>::from_slice(&r.payload);
        match Message::decode(r.kind, r.region, bits, &transcript.config) {
            Ok(m) => {
                msgs.insert(r.seq, m);
            }
            Err(e) => errors.push(format!("record {}: {e}", r.seq)),
        }
    }
    (msgs, errors)
}

struct Inputs<'a, 'v> {
    view: &'v BobView<'a>,
    at: Time,
    missing: Option<(MsgKind, RegionId)>,
}

impl<'a, 'v> Inputs<'a, 'v> {
    fn new(view: &'v BobView<'a>) -> Self {
        Inputs {
            view,
            at: Time::MIN,
            missing: None,
        }
    }

    fn take(&mut self, kind: MsgKind, region: RegionId) -> Option<&'a Message> {
        match self.view.get(kind, region) {
            Some((t, m)) => {
                self.at = self.at.max(t);
                Some(m)
            }
            None => {
                self.missing.get_or_insert((kind, region));
                None
            }
        }
    }
}

fn pairs_of(m: Option<&Message>) -> &[ChallengePair] {
    match m {
        Some(Message::Challenge(p)) => p,
        _ => &[],
    }
}

fn values_of(m: Option<&Message>) -> &[u64] {
    m.map_or(&[], |m| m.values())
}

/// Pair indices of the batch made in `P_k` that survive its linking.
fn residual(cfg: &SessionConfig, k: u32, query: Option<&Message>) -> Option<Vec<usize>> {
    if k == 1 {
        return Some((0..cfg.m()).collect());
    }
    match query? {
        Message::LinkQuery { injection, .. } => Some(residual_indices(injection, 2 * cfg.m())),
        _ => None,
    }
}

/// Opens elementary `e` of the batch made in `P_k` from the digits of its
/// randomness committed in `Q_k`.
fn open_sustained(
    cfg: &SessionConfig,
    roots: (&[ChallengePair], &[u64]),
    children: (&[ChallengePair], &[u64]),
    e: usize,
    revealed: &[u64],
) -> Option<u8> {
    let m = cfg.digits();
    let (rp, rr) = roots;
    let (cp, cr) = children;
    if e >= rp.len() || e >= rr.len() || (e + 1) * m > cp.len() || (e + 1) * m > cr.len() {
        return None;
    }
    match verify_chain(&rp[e], rr[e], &cp[e * m..(e + 1) * m], &cr[e * m..(e + 1) * m], revealed, &cfg.params) {
        ChainVerdict::Accept(b) => Some(b),
        ChainVerdict::Reject => None,
    }
}

/// The linking test run in `P_k`, `k >= 2`.
///
/// With `final_` unset a missing answer only leaves the check incomplete,
/// since it may still be in flight.
pub(crate) fn link_check(view: &BobView<'_>, cfg: &SessionConfig, k: u32, final_: bool) -> CheckStatus {
    let (p_old, q_old, p, q) = (RegionId::p(k - 1), RegionId::q(k - 1), RegionId::p(k), RegionId::q(k));
    let mut inp = Inputs::new(view);
    let old_ch = inp.take(MsgKind::Challenge, p_old);
    let old_rep = inp.take(MsgKind::Reply, p_old);
    let old_cch = inp.take(MsgKind::Challenge, q_old);
    let old_crep = inp.take(MsgKind::Reply, q_old);
    let prev_query = if k >= 3 { inp.take(MsgKind::LinkQuery, p_old) } else { None };
    let ch = inp.take(MsgKind::Challenge, p);
    let rep = inp.take(MsgKind::Reply, p);
    let query = inp.take(MsgKind::LinkQuery, p);
    let rel = inp.take(MsgKind::Relations, p);
    let spots = inp.take(MsgKind::SpotChoices, p);
    let open = inp.take(MsgKind::LinkOpen, p);
    let cch = inp.take(MsgKind::Challenge, q);
    let crep = inp.take(MsgKind::Reply, q);
    if let Some((kind, region)) = inp.missing {
        let bob_sent_prompt = match kind {
            MsgKind::Reply => view.has(MsgKind::Challenge, region) && !view.has(MsgKind::Unveil, region),
            MsgKind::Relations => view.has(MsgKind::LinkQuery, region),
            MsgKind::LinkOpen => view.has(MsgKind::SpotChoices, region),
            _ => false,
        };
        if final_ && bob_sent_prompt {
            return CheckStatus::Fail {
                at: inp.at,
                reason: format!("no {kind} in {region}"),
            };
        }
        return CheckStatus::Incomplete;
    }
    let at = inp.at;
    let fail = |reason: String| CheckStatus::Fail { at, reason };
    let m = cfg.m();
    let w = cfg.digits();
    let Some(Message::LinkQuery { injection, mask }) = query else {
        return fail("malformed link query".into());
    };
    let (Some(Message::Relations(rel)), Some(Message::SpotChoices(spots)), Some(Message::LinkOpen(open))) =
        (rel, spots, open)
    else {
        return fail("malformed linking message".into());
    };
    if injection.len() != m || mask.len() != m || !mask.iter().all(|&b| b) {
        return fail("link query does not ask for every relation".into());
    }
    if rel.len() != m || spots.len() != m || open.len() != 2 * m * w {
        return fail("linking message has the wrong length".into());
    }
    let Some(res) = residual(cfg, k - 1, prev_query) else {
        return fail("previous linking unavailable".into());
    };
    let old_roots = (pairs_of(old_ch), values_of(old_rep));
    let old_children = (pairs_of(old_cch), values_of(old_crep));
    let roots = (pairs_of(ch), values_of(rep));
    let children = (pairs_of(cch), values_of(crep));
    for j in 0..m {
        let c = spots[j].index();
        let old_e = 2 * res[j] + c;
        let new_e = 2 * injection[j] + c;
        let old_bits = &open[j * w..(j + 1) * w];
        let new_bits = &open[(m + j) * w..(m + j + 1) * w];
        let Some(a) = open_sustained(cfg, old_roots, old_children, old_e, old_bits) else {
            return fail(format!("old elementary {old_e} does not open"));
        };
        let Some(b) = open_sustained(cfg, roots, children, new_e, new_bits) else {
            return fail(format!("new elementary {new_e} does not open"));
        };
        if !rel[j].holds_for(a, b) {
            return fail(format!("spot check {j} contradicts declared relation"));
        }
    }
    CheckStatus::Pass { at }
}

/// Rounds `k >= 2` whose `P_k` carried a linking query.
fn linked_rounds(cfg: &SessionConfig) -> Vec<u32> {
    if cfg.kind != ProtocolKind::Rbc2 {
        return Vec::new();
    }
    (2..=cfg.last_region().div_ceil(2))
        .filter(|&k| RegionId::p(k).0 <= cfg.last_region() && cfg.unveil_at != Some(RegionId::p(k).0))
        .collect()
}

/// First failing linking check in the view, for Bob's in-session abort.
pub(crate) fn first_failure(view: &BobView<'_>, cfg: &SessionConfig, skip: &mut Vec<u32>) -> Option<String> {
    for k in linked_rounds(cfg) {
        if skip.contains(&k) {
            continue;
        }
        match link_check(view, cfg, k, false) {
            CheckStatus::Incomplete => {}
            CheckStatus::Pass { .. } => skip.push(k),
            CheckStatus::Fail { reason, .. } => return Some(reason),
        }
    }
    None
}

fn descend_rbc1(cfg: &SessionConfig, inp: &mut Inputs<'_, '_>, top: u32, mut rand: Vec<u64>) -> Result<u8, String> {
    let m = cfg.digits();
    for level in (1..=top).rev() {
        let region = RegionId(level);
        let pairs = pairs_of(inp.take(MsgKind::Challenge, region));
        let replies = values_of(inp.take(MsgKind::Reply, region));
        if pairs.len() != rand.len() || replies.len() != rand.len() {
            return Err(format!("level {level} data incomplete"));
        }
        let digits: Option<Vec<u8>> = (0..rand.len())
            .map(|i| open_commitment(&pairs[i], replies[i], rand[i], &cfg.params))
            .collect();
        let digits = digits.ok_or_else(|| format!("level {level} commitment does not open"))?;
        if level == 1 {
            return Ok(digits[0]);
        }
        rand = digits
            .chunks(m)
            .map(|c| from_digits(c))
            .collect::<Vec<_>>();
        if rand.iter().any(|&r| r >= cfg.params.modulus()) {
            return Err(format!("level {} randomness out of range", level - 1));
        }
    }
    Err("empty chain".into())
}

fn unveil_rbc2(cfg: &SessionConfig, inp: &mut Inputs<'_, '_>, u: RegionId, values: &[u64]) -> Result<u8, String> {
    let m = cfg.m();
    let w = cfg.digits();
    let k = u.round();
    let bits: Vec<u8> = if u.is_p() {
        // opens the residual of the batch made in P_{k-1} (all of batch 1 when u = P1)
        let kb = if k == 1 { 1 } else { k - 1 };
        let prev_query = if kb >= 2 { inp.take(MsgKind::LinkQuery, RegionId::p(kb)) } else { None };
        let roots = (
            pairs_of(inp.take(MsgKind::Challenge, RegionId::p(kb))),
            values_of(inp.take(MsgKind::Reply, RegionId::p(kb))),
        );
        let children = (
            pairs_of(inp.take(MsgKind::Challenge, RegionId::q(kb))),
            values_of(inp.take(MsgKind::Reply, RegionId::q(kb))),
        );
        let res = residual(cfg, kb, prev_query).ok_or("residual undetermined")?;
        let mut out = Vec::with_capacity(2 * m);
        for (t, &j) in res.iter().enumerate() {
            for c in 0..2 {
                let e = 2 * j + c;
                let slot = 2 * t + c;
                let revealed = values.get(slot * w..(slot + 1) * w).ok_or("unveiling too short")?;
                out.push(open_sustained(cfg, roots, children, e, revealed).ok_or(format!("elementary {e} does not open"))?);
            }
        }
        out
    } else {
        let query = if k >= 2 { inp.take(MsgKind::LinkQuery, RegionId::p(k)) } else { None };
        let pairs = pairs_of(inp.take(MsgKind::Challenge, RegionId::p(k)));
        let replies = values_of(inp.take(MsgKind::Reply, RegionId::p(k)));
        let res = residual(cfg, k, query).ok_or("residual undetermined")?;
        let mut out = Vec::with_capacity(2 * m);
        for &j in &res {
            for c in 0..2 {
                let e = 2 * j + c;
                let (Some(p), Some(&r), Some(&v)) = (pairs.get(e), replies.get(e), values.get(e)) else {
                    return Err("unveiling data incomplete".into());
                };
                out.push(open_commitment(p, r, v, &cfg.params).ok_or(format!("elementary {e} does not open"))?);
            }
        }
        out
    };
    let xors: Vec<u8> = bits.chunks(2).map(|c| c[0] ^ c[1]).collect();
    match xors.first() {
        Some(&b) if xors.iter().all(|&x| x == b) => Ok(b),
        Some(_) => Err("residual pairs disagree on the bit".into()),
        None => Err("empty residual".into()),
    }
}

/// Region-membership and adjacent-region independence of the unveiling.
fn unveil_timing(transcript: &Transcript, unveil: &Record) -> Result<(), String> {
    let schedule = transcript.config.schedule().map_err(|e| e.to_string())?;
    let u = unveil.region.ok_or("unveiling without region")?;
    for (what, ev) in [("emitted", &unveil.emit), ("received", &unveil.receive)] {
        if !schedule.contains(u, ev.time, ev.position) {
            return Err(format!("unveiling {what} at t={} outside {u}", ev.time));
        }
    }
    for q in &transcript.records {
        let Some(qr) = q.region else { continue };
        if q.kind.is_query() && qr.0.abs_diff(u.0) == 1 && !independence_check(&unveil.receive, &q.emit) {
            return Err(format!("unveiling received inside the light cone of {} in {qr}", q.kind));
        }
    }
    Ok(())
}

/// Final check by the Bob agent that did not receive the unveiling.
pub fn verify_unveiling(transcript: &Transcript) -> UnveilVerdict {
    let (msgs, errors) = decoded_messages(transcript);
    if let Some(e) = errors.first() {
        return UnveilVerdict::Reject(format!("malformed: {e}"));
    }
    match unveil_with(transcript, &msgs) {
        Some((v, _)) => v,
        None => UnveilVerdict::Reject("no unveiling in transcript".into()),
    }
}

fn unveil_with<L: MessageLookup + ?Sized>(
    transcript: &Transcript,
    lookup: &L,
) -> Option<(UnveilVerdict, Option<VerificationEvent>)> {
    let cfg = &transcript.config;
    let unveil = transcript.records.iter().find(|r| r.kind == MsgKind::Unveil);
    let Some(unveil) = unveil else {
        return cfg
            .unveil_at
            .map(|u| (UnveilVerdict::Reject(format!("no unveiling in {}", RegionId(u))), None));
    };
    let Some(u) = unveil.region else {
        return Some((UnveilVerdict::Reject("unveiling without region".into()), None));
    };
    let verifier = Agent::bob_at(unveil.receiver.site().other());
    let entries = bob_entries(transcript, verifier);
    let view = BobView::from_entries(verifier, &entries, lookup);
    let mut inp = Inputs::new(&view);
    let Some(values) = inp.take(MsgKind::Unveil, u).map(|m| m.values().to_vec()) else {
        return Some((UnveilVerdict::Reject("unveiling never reached the verifier".into()), None));
    };
    let result = (|| -> Result<u8, String> {
        if cfg.unveil_at != Some(u.0) {
            return Err(format!("unveiling in {u} but the session fixed region {:?}", cfg.unveil_at));
        }
        unveil_timing(transcript, unveil)?;
        match cfg.kind {
            ProtocolKind::Rbc1 => {
                let top = if u.0 == 1 { 2 } else { u.0 - 1 };
                if values.len() != cfg.rbc1_level_size(top) as usize {
                    return Err("unveiling has the wrong length".into());
                }
                descend_rbc1(cfg, &mut inp, top, values.clone())
            }
            ProtocolKind::Rbc2 => {
                let last_link = if u.is_p() { u.round().saturating_sub(1) } else { u.round() };
                for k in 2..=last_link {
                    match link_check(&view, cfg, k, true) {
                        CheckStatus::Pass { at } => inp.at = inp.at.max(at),
                        CheckStatus::Fail { reason, .. } => return Err(format!("linking in {}: {reason}", RegionId::p(k))),
                        CheckStatus::Incomplete => return Err(format!("linking in {} incomplete", RegionId::p(k))),
                    }
                }
                unveil_rbc2(cfg, &mut inp, u, &values)
            }
        }
    })();
    let event = VerificationEvent {
        agent: verifier,
        time: inp.at,
        position: cfg.geometry.site_center(verifier.site()),
    };
    let verdict = match result {
        Ok(b) => UnveilVerdict::Accept(b),
        Err(r) => UnveilVerdict::Reject(r),
    };
    Some((verdict, Some(event)))
}

pub(crate) fn verify_with<L: MessageLookup + ?Sized>(
    transcript: &Transcript,
    lookup: &L,
    decode_errors: Vec<String>,
) -> VerificationReport {
    let cfg = &transcript.config;
    let mut report = VerificationReport {
        decode_errors,
        ..Default::default()
    };
    if let Ok(schedule) = cfg.schedule() {
        report.violations = verify_transcript_causality(&transcript.signal_records(), &schedule);
    }
    let entries = bob_entries(transcript, Agent::B2);
    let view = BobView::from_entries(Agent::B2, &entries, lookup);
    let mut last_pass = None;
    for k in linked_rounds(cfg) {
        let s = link_check(&view, cfg, k, true);
        if let CheckStatus::Pass { at } = s {
            last_pass = Some(at);
        }
        report.link_checks.push((k, s));
    }
    report.event = last_pass.map(|time| VerificationEvent {
        agent: Agent::B2,
        time,
        position: cfg.geometry.site_center(Site::Two),
    });
    if let Some((verdict, event)) = unveil_with(transcript, lookup) {
        report.unveil = Some(verdict);
        if event.is_some() {
            report.event = event;
        }
    }
    report
}

/// Full offline check: causality, every linking test and the unveiling.
pub fn verify_session(transcript: &Transcript) -> VerificationReport {
    let (msgs, errors) = decoded_messages(transcript);
    verify_with(transcript, &msgs, errors)
}
