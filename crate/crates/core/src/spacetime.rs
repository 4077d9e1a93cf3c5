//! Minkowski geometry with c = 1 on a one-dimensional line.
//!
//! Times and positions are integer ticks, so every light-cone comparison is
//! exact. Two sites sit at `x1` and `x2`; each hosts one Alice and one Bob
//! laboratory inside a ball (an interval, in 1-D) of radius `delta`.

use std::fmt;

use thiserror::Error;

/// Coordinate time in ticks.
pub type Time = i64;
/// Spatial coordinate in length units (one tick of light travel).
pub type Position = i64;

pub const DEFAULT_SEPARATION_FACTOR: i64 = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpacetimeError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),
    #[error("emission at position {position} lies outside the laboratory ball around {center} (radius {radius})")]
    OutOfLaboratory {
        position: Position,
        center: Position,
        radius: i64,
    },
}

/// One of the two agreed sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    One,
    Two,
}

impl Site {
    pub fn other(self) -> Site {
        match self {
            Site::One => Site::Two,
            Site::Two => Site::One,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub x1: Position,
    pub x2: Position,
    /// Laboratory radius.
    pub delta: i64,
    /// Site separation `|x1 - x2|`.
    pub delta_x: i64,
    /// Length of every P/Q time interval.
    pub delta_t: i64,
    pub separation_factor: i64,
    /// Extra delay on same-site A<->B links, at most `2 * delta`.
    pub intra_latency: i64,
}

impl Geometry {
    /// Sites at `x1` and `x1 + delta_x` with the default separation factor and no
    /// intra-site latency.
    pub fn new(x1: Position, delta: i64, delta_x: i64, delta_t: i64) -> Result<Self, SpacetimeError> {
        Self::with_options(x1, delta, delta_x, delta_t, DEFAULT_SEPARATION_FACTOR, 0)
    }

    pub fn with_options(
        x1: Position,
        delta: i64,
        delta_x: i64,
        delta_t: i64,
        separation_factor: i64,
        intra_latency: i64,
    ) -> Result<Self, SpacetimeError> {
        let g = Geometry {
            x1,
            x2: x1 + delta_x,
            delta,
            delta_x,
            delta_t,
            separation_factor,
            intra_latency,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), SpacetimeError> {
        let bad = |s: String| Err(SpacetimeError::InvalidGeometry(s));
        if self.delta <= 0 {
            return bad(format!("delta must be positive (got {})", self.delta));
        }
        if self.delta_x <= 0 {
            return bad(format!("delta_x must be positive (got {})", self.delta_x));
        }
        if (self.x1 - self.x2).abs() != self.delta_x {
            return bad(format!(
                "delta_x = {} disagrees with |x1 - x2| = {}",
                self.delta_x,
                (self.x1 - self.x2).abs()
            ));
        }
        if self.delta_t <= 4 * self.delta {
            return bad(format!(
                "delta_t = {} must exceed 4*delta = {} so a query and its reply fit inside one region",
                self.delta_t,
                4 * self.delta
            ));
        }
        if self.separation_factor < 1 {
            return bad("separation_factor must be at least 1".into());
        }
        if self.delta_x < self.separation_factor * self.delta_t {
            return bad(format!(
                "delta_x = {} must be at least separation_factor*delta_t = {}",
                self.delta_x,
                self.separation_factor * self.delta_t
            ));
        }
        if self.intra_latency < 0 || self.intra_latency > 2 * self.delta {
            return bad(format!(
                "intra_latency = {} must lie in [0, 2*delta]",
                self.intra_latency
            ));
        }
        Ok(())
    }

    pub fn site_center(&self, site: Site) -> Position {
        match site {
            Site::One => self.x1,
            Site::Two => self.x2,
        }
    }

    /// Whether `pos` lies in the laboratory ball of `site`.
    pub fn in_laboratory(&self, site: Site, pos: Position) -> bool {
        (pos - self.site_center(site)).abs() <= self.delta
    }

    pub fn site_of(&self, pos: Position) -> Option<Site> {
        if self.in_laboratory(Site::One, pos) {
            Some(Site::One)
        } else if self.in_laboratory(Site::Two, pos) {
            Some(Site::Two)
        } else {
            None
        }
    }
}

/// Minimum signal time between two points.
pub fn light_travel_time(p: Position, q: Position) -> i64 {
    (p - q).abs()
}

/// A point in spacetime with a tie-break counter giving a total order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpacetimeEvent {
    pub time: Time,
    pub position: Position,
    pub seq: u64,
}

impl SpacetimeEvent {
    pub fn new(time: Time, position: Position, seq: u64) -> Self {
        SpacetimeEvent { time, position, seq }
    }
}

impl PartialOrd for SpacetimeEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SpacetimeEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.seq, self.position).cmp(&(other.time, other.seq, other.position))
    }
}

/// True iff a reply received at `reply_receive` cannot have been influenced by
/// a signal emitted at `foreign_emit`.
pub fn independence_check(reply_receive: &SpacetimeEvent, foreign_emit: &SpacetimeEvent) -> bool {
    reply_receive.time
        < foreign_emit.time + light_travel_time(foreign_emit.position, reply_receive.position)
}

/// Identifies a P or Q region by its position in the interleaved sequence
/// P1, Q1, P2, Q2, ...; index 1 is P1, index 2 is Q1, and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId(pub u32);

impl RegionId {
    pub fn site(self) -> Site {
        if self.0 % 2 == 1 {
            Site::One
        } else {
            Site::Two
        }
    }

    pub fn is_p(self) -> bool {
        self.0 % 2 == 1
    }

    /// `k` in `P_k` / `Q_k`.
    pub fn round(self) -> u32 {
        self.0.div_ceil(2)
    }

    pub fn p(k: u32) -> Self {
        RegionId(2 * k - 1)
    }

    pub fn q(k: u32) -> Self {
        RegionId(2 * k)
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.is_p() { 'P' } else { 'Q' };
        write!(f, "{}{}", tag, self.round())
    }
}

/// Closed time interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub start: Time,
    pub end: Time,
}

impl Interval {
    pub fn contains(&self, t: Time) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn len(&self) -> i64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionSchedule {
    pub geometry: Geometry,
    pub p_intervals: Vec<Interval>,
    pub q_intervals: Vec<Interval>,
}

impl RegionSchedule {
    pub fn region_count(&self) -> u32 {
        (self.p_intervals.len() + self.q_intervals.len()) as u32
    }

    pub fn interval(&self, region: RegionId) -> Option<Interval> {
        let idx = region.round().checked_sub(1)? as usize;
        if region.is_p() {
            self.p_intervals.get(idx).copied()
        } else {
            self.q_intervals.get(idx).copied()
        }
    }

    /// Whether a spacetime point lies inside `region`.
    pub fn contains(&self, region: RegionId, time: Time, pos: Position) -> bool {
        match self.interval(region) {
            Some(iv) => iv.contains(time) && self.geometry.in_laboratory(region.site(), pos),
            None => false,
        }
    }

    pub fn start(&self, region: RegionId) -> Option<Time> {
        self.interval(region).map(|iv| iv.start)
    }

    /// All regions in time order.
    pub fn regions(&self) -> impl Iterator<Item = RegionId> {
        (1..=self.region_count()).map(RegionId)
    }
}

/// Lays out `rounds` P/Q pairs back to back from `start`, each of length
/// `delta_t`, and checks that every pair of adjacent regions is sufficiently
/// spacelike separated at the worst-case interval endpoints.
pub fn make_schedule(geometry: &Geometry, rounds: u32, start: Time) -> Result<RegionSchedule, SpacetimeError> {
    if geometry.delta_t <= 4 * geometry.delta {
        return Err(SpacetimeError::InfeasibleSchedule(format!(
            "delta_t = {} does not exceed 4*delta = {}",
            geometry.delta_t,
            4 * geometry.delta
        )));
    }
    let dt = geometry.delta_t;
    let mut p_intervals = Vec::with_capacity(rounds as usize);
    let mut q_intervals = Vec::with_capacity(rounds as usize);
    for k in 0..rounds as i64 {
        let s = start + 2 * k * dt;
        p_intervals.push(Interval { start: s, end: s + dt });
        q_intervals.push(Interval {
            start: s + dt,
            end: s + 2 * dt,
        });
    }
    let schedule = RegionSchedule {
        geometry: *geometry,
        p_intervals,
        q_intervals,
    };
    for r in 1..schedule.region_count() {
        let (a, b) = (RegionId(r), RegionId(r + 1));
        if !adjacent_regions_independent(&schedule, a, b) {
            return Err(SpacetimeError::InfeasibleSchedule(format!(
                "regions {a} and {b} are not sufficiently spacelike separated"
            )));
        }
    }
    Ok(schedule)
}

/// Checks both directions over the interval endpoints and ball edges, which
/// are the extremal cases in one dimension.
pub fn adjacent_regions_independent(schedule: &RegionSchedule, a: RegionId, b: RegionId) -> bool {
    let g = &schedule.geometry;
    let (Some(ia), Some(ib)) = (schedule.interval(a), schedule.interval(b)) else {
        return false;
    };
    let corners = |region: RegionId, iv: Interval| {
        let c = g.site_center(region.site());
        [iv.start, iv.end]
            .into_iter()
            .flat_map(move |t| [c - g.delta, c + g.delta].into_iter().map(move |x| (t, x)))
    };
    for (t1, x1) in corners(a, ia) {
        for (t2, x2) in corners(b, ib) {
            let ea = SpacetimeEvent::new(t1, x1, 0);
            let eb = SpacetimeEvent::new(t2, x2, 0);
            if !independence_check(&ea, &eb) || !independence_check(&eb, &ea) {
                return false;
            }
        }
    }
    true
}

/// A message in flight between two agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope<A, P> {
    pub sender: A,
    pub receiver: A,
    pub emit: SpacetimeEvent,
    pub receive: SpacetimeEvent,
    pub payload: P,
}

impl<A, P> Envelope<A, P> {
    pub fn seq(&self) -> u64 {
        self.emit.seq
    }
}

/// Light-speed transport; hands out monotone sequence numbers.
#[derive(Debug, Clone)]
pub struct Transport {
    geometry: Geometry,
    next_seq: u64,
}

impl Transport {
    pub fn new(geometry: Geometry) -> Self {
        Transport { geometry, next_seq: 0 }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// Emits `payload` from `sender_site` at `(time, from)` towards `to`.
    /// Same-site deliveries pay the intra-site latency on top of light travel.
    #[allow(clippy::too_many_arguments)]
    pub fn deliver<A, P>(
        &mut self,
        sender: A,
        sender_site: Site,
        receiver: A,
        receiver_pos: Position,
        time: Time,
        from: Position,
        payload: P,
    ) -> Result<Envelope<A, P>, SpacetimeError> {
        if !self.geometry.in_laboratory(sender_site, from) {
            return Err(SpacetimeError::OutOfLaboratory {
                position: from,
                center: self.geometry.site_center(sender_site),
                radius: self.geometry.delta,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        let same_site = self.geometry.site_of(receiver_pos) == Some(sender_site);
        let latency = if same_site { self.geometry.intra_latency } else { 0 };
        let arrive = time + light_travel_time(from, receiver_pos) + latency;
        Ok(Envelope {
            sender,
            receiver,
            emit: SpacetimeEvent::new(time, from, seq),
            receive: SpacetimeEvent::new(arrive, receiver_pos, seq),
            payload,
        })
    }
}

/// What a signal does in the protocol, as far as causality checking cares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalRole {
    /// Bob to Alice.
    Query,
    /// Alice to Bob.
    Reply,
    /// Same-party coordination between the two sites.
    Coordination,
}

/// Protocol-agnostic view of one transcript entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalRecord {
    pub seq: u64,
    pub emit: SpacetimeEvent,
    pub receive: SpacetimeEvent,
    pub role: SignalRole,
    /// Region both endpoints must lie in, when the protocol assigns one.
    pub region: Option<RegionId>,
    /// Signal whose reception must precede this emission.
    pub responds_to: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Superluminal {
        seq: u64,
        elapsed: i64,
        distance: i64,
    },
    OutOfRegion {
        seq: u64,
        region: RegionId,
        endpoint: &'static str,
        time: Time,
        position: Position,
    },
    NotIndependent {
        reply_seq: u64,
        query_seq: u64,
    },
    Acausal {
        trigger_seq: u64,
        response_seq: u64,
    },
    UnknownTrigger {
        seq: u64,
        trigger_seq: u64,
    },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::Superluminal { .. } => "superluminal",
            Violation::OutOfRegion { .. } => "out-of-region",
            Violation::NotIndependent { .. } => "not-independent",
            Violation::Acausal { .. } => "acausal",
            Violation::UnknownTrigger { .. } => "unknown-trigger",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Superluminal { seq, elapsed, distance } => write!(
                f,
                "superluminal: record {seq} arrives after {elapsed} ticks over distance {distance}"
            ),
            Violation::OutOfRegion {
                seq,
                region,
                endpoint,
                time,
                position,
            } => write!(
                f,
                "out-of-region: record {seq} {endpoint} at (t={time}, x={position}) outside {region}"
            ),
            Violation::NotIndependent { reply_seq, query_seq } => write!(
                f,
                "not-independent: reply {reply_seq} received inside the light cone of query {query_seq}"
            ),
            Violation::Acausal {
                trigger_seq,
                response_seq,
            } => write!(
                f,
                "acausal: record {response_seq} emitted before its trigger {trigger_seq} was received"
            ),
            Violation::UnknownTrigger { seq, trigger_seq } => {
                write!(f, "unknown-trigger: record {seq} responds to missing record {trigger_seq}")
            }
        }
    }
}

/// Scans a transcript for light-speed, region-membership, reply-after-query
/// and adjacent-region independence violations.
///
/// Independence is required between every reply received in a region and
/// every query emitted in the two neighbouring regions.
pub fn verify_transcript_causality(records: &[SignalRecord], schedule: &RegionSchedule) -> Vec<Violation> {
    let mut out = Vec::new();
    for r in records {
        let distance = light_travel_time(r.emit.position, r.receive.position);
        let elapsed = r.receive.time - r.emit.time;
        if elapsed < distance {
            out.push(Violation::Superluminal {
                seq: r.seq,
                elapsed,
                distance,
            });
        }
        if let Some(region) = r.region {
            for (endpoint, ev) in [("emission", &r.emit), ("reception", &r.receive)] {
                if !schedule.contains(region, ev.time, ev.position) {
                    out.push(Violation::OutOfRegion {
                        seq: r.seq,
                        region,
                        endpoint,
                        time: ev.time,
                        position: ev.position,
                    });
                }
            }
        }
    }

    let by_seq: std::collections::BTreeMap<u64, &SignalRecord> = records.iter().map(|r| (r.seq, r)).collect();
    for r in records {
        if let Some(t) = r.responds_to {
            match by_seq.get(&t) {
                Some(trigger) if trigger.receive.time > r.emit.time => out.push(Violation::Acausal {
                    trigger_seq: t,
                    response_seq: r.seq,
                }),
                Some(_) => {}
                None => out.push(Violation::UnknownTrigger { seq: r.seq, trigger_seq: t }),
            }
        }
    }

    let queries: Vec<&SignalRecord> = records.iter().filter(|r| r.role == SignalRole::Query).collect();
    for reply in records.iter().filter(|r| r.role == SignalRole::Reply) {
        let Some(region) = reply.region else { continue };
        for q in &queries {
            let Some(qr) = q.region else { continue };
            if qr.0.abs_diff(region.0) == 1 && !independence_check(&reply.receive, &q.emit) {
                out.push(Violation::NotIndependent {
                    reply_seq: reply.seq,
                    query_seq: q.seq,
                });
            }
        }
    }
    out
}
