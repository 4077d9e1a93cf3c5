//! Line-oriented transcript files.
//!
//! ```text
//! #rbc-transcript protocol=rbc2 N=4 M=4 ... seed=7 records=41
//! seq  sender  receiver  emit_time  emit_pos  recv_time  recv_pos  msg_type  payload_hex  bit_size
//! 0    B1      A1        0          0         1          0         challenge@1  a4f0     16
//! ```
//!
//! Fields are tab separated. Records are sorted by reception time, then seq.

use super::message::MsgKind;
use super::{Agent, ProtocolKind, SessionConfig};
use crate::elementary::ProtocolParams;
use crate::rudich::RudichParams;
use crate::spacetime::{Geometry, RegionId, SignalRecord, SignalRole, SpacetimeEvent};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

const MAGIC: &str = "#rbc-transcript";
const COLUMNS: [&str; 10] = [
    "seq",
    "sender",
    "receiver",
    "emit_time",
    "emit_pos",
    "recv_time",
    "recv_pos",
    "msg_type",
    "payload_hex",
    "bit_size",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranscriptError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

fn perr(line: usize, message: impl Into<String>) -> TranscriptError {
    TranscriptError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub seq: u64,
    pub sender: Agent,
    pub receiver: Agent,
    pub emit: SpacetimeEvent,
    pub receive: SpacetimeEvent,
    pub kind: MsgKind,
    pub region: Option<RegionId>,
    pub payload: Vec<u8>,
    pub bit_size: u64,
}

impl Record {
    pub fn msg_type(&self) -> String {
        match self.region {
            Some(r) => format!("{}@{}", self.kind, r.0),
            None => self.kind.to_string(),
        }
    }

    pub fn role(&self) -> SignalRole {
        match (self.sender.is_bob(), self.receiver.is_bob()) {
            (true, false) => SignalRole::Query,
            (false, true) => SignalRole::Reply,
            _ => SignalRole::Coordination,
        }
    }

    /// Alice-Bob traffic, the part the cost formulas count.
    pub fn is_protocol(&self) -> bool {
        self.sender.is_bob() != self.receiver.is_bob()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub config: SessionConfig,
    pub records: Vec<Record>,
}

impl Transcript {
    pub fn new(config: SessionConfig, mut records: Vec<Record>) -> Self {
        records.sort_by_key(|r| (r.receive.time, r.seq));
        Transcript { config, records }
    }

    pub fn by_seq(&self) -> BTreeMap<u64, &Record> {
        self.records.iter().map(|r| (r.seq, r)).collect()
    }

    pub fn find(&self, kind: MsgKind, region: RegionId) -> Option<&Record> {
        self.records.iter().find(|r| r.kind == kind && r.region == Some(region))
    }

    /// Causality view, with each response tied to the record that prompted it.
    pub fn signal_records(&self) -> Vec<SignalRecord> {
        let by_seq = self.by_seq();
        self.records
            .iter()
            .map(|r| {
                let responds_to = match r.kind {
                    MsgKind::Forward => forwarded_seq(r).and_then(|s| {
                        by_seq.get(&s).filter(|orig| orig.receiver == r.sender).map(|orig| orig.seq)
                    }),
                    k => k.trigger().and_then(|tk| {
                        self.records
                            .iter()
                            .filter(|t| t.kind == tk && t.region == r.region && t.receiver == r.sender)
                            .map(|t| t.seq)
                            .max()
                    }),
                };
                SignalRecord {
                    seq: r.seq,
                    emit: r.emit,
                    receive: r.receive,
                    role: r.role(),
                    region: r.region,
                    responds_to,
                }
            })
            .collect()
    }

    pub fn header_line(&self) -> String {
        let c = &self.config;
        let g = &c.geometry;
        format!(
            "{MAGIC} protocol={} N={} M={} gamma_M={} zero_convention={} rounds={} unveil_at={} strategy={} \
             x1={} delta={} delta_x={} delta_t={} separation_factor={} intra_latency={} budget={} seed={} records={}",
            c.kind.as_str(),
            c.params.modulus(),
            c.rudich.m(),
            c.rudich.gamma_m(),
            c.params.zero_convention as u8,
            c.rounds,
            c.unveil_at.map_or("never".to_string(), |u| u.to_string()),
            c.strategy,
            g.x1,
            g.delta,
            g.delta_x,
            g.delta_t,
            g.separation_factor,
            g.intra_latency,
            c.budget,
            c.seed,
            self.records.len()
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header_line();
        out.push('\n');
        out.push_str(&COLUMNS.join("\t"));
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.seq,
                r.sender,
                r.receiver,
                r.emit.time,
                r.emit.position,
                r.receive.time,
                r.receive.position,
                r.msg_type(),
                hex::encode(&r.payload),
                r.bit_size
            );
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<(), TranscriptError> {
        std::fs::write(path, self.to_text()).map_err(|e| TranscriptError::Io(format!("{}: {e}", path.display())))
    }

    pub fn read_from(path: &Path) -> Result<Self, TranscriptError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| TranscriptError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, TranscriptError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
        let (config, expected) = parse_header(header)?;
        let (n, cols) = lines.next().ok_or_else(|| perr(2, "missing column header"))?;
        if cols.split('\t').collect::<Vec<_>>() != COLUMNS {
            return Err(perr(n, "column header does not match"));
        }
        let mut records = Vec::new();
        let mut last_line = 2;
        for (n, line) in lines {
            last_line = n;
            if line.is_empty() {
                continue;
            }
            records.push(parse_record(n, line)?);
        }
        if records.len() != expected {
            return Err(perr(
                last_line + 1,
                format!("expected {expected} records, found {}", records.len()),
            ));
        }
        let sorted = records
            .windows(2)
            .all(|w| (w[0].receive.time, w[0].seq) < (w[1].receive.time, w[1].seq));
        if !sorted {
            return Err(perr(3, "records not ordered by (recv_time, seq)"));
        }
        Ok(Transcript { config, records })
    }
}

pub(crate) fn forwarded_seq(r: &Record) -> Option<u64> {
    if r.kind != MsgKind::Forward || r.payload.len() != 8 {
        return None;
    }
    Some(u64::from_be_bytes(r.payload[..8].try_into().ok()?))
}

fn parse_header(line: &str) -> Result<(SessionConfig, usize), TranscriptError> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(perr(1, format!("expected {MAGIC} header")));
    }
    let kv: BTreeMap<&str, &str> = parts
        .map(|p| p.split_once('=').ok_or_else(|| perr(1, format!("malformed header field {p:?}"))))
        .collect::<Result<_, _>>()?;
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| perr(1, format!("header is missing {k}")));
    let num = |k: &str| -> Result<i64, TranscriptError> {
        get(k)?.parse().map_err(|_| perr(1, format!("header field {k} is not an integer")))
    };
    let kind = ProtocolKind::parse(get("protocol")?).ok_or_else(|| perr(1, "unknown protocol"))?;
    let bad = |e: String| perr(1, e);
    let params = ProtocolParams::new(num("N")? as u64)
        .map_err(|e| bad(e.to_string()))?
        .with_zero_convention(num("zero_convention")? != 0);
    let rudich = RudichParams::with_gamma(num("M")? as usize, num("gamma_M")? as usize).map_err(|e| bad(e.to_string()))?;
    let unveil_at = match get("unveil_at")? {
        "never" => None,
        s => Some(s.parse().map_err(|_| perr(1, "header field unveil_at is not an integer"))?),
    };
    let geometry = Geometry::with_options(
        num("x1")?,
        num("delta")?,
        num("delta_x")?,
        num("delta_t")?,
        num("separation_factor")?,
        num("intra_latency")?,
    )
    .map_err(|e| bad(e.to_string()))?;
    let config = SessionConfig {
        kind,
        params,
        rudich,
        rounds: num("rounds")? as u32,
        unveil_at,
        geometry,
        seed: get("seed")?.parse().map_err(|_| perr(1, "header field seed is not an integer"))?,
        strategy: get("strategy")?.to_string(),
        budget: num("budget")? as u64,
    };
    config.validate().map_err(|e| bad(e.to_string()))?;
    Ok((config, num("records")? as usize))
}

fn parse_record(n: usize, line: &str) -> Result<Record, TranscriptError> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != COLUMNS.len() {
        return Err(perr(n, format!("expected {} fields, found {}", COLUMNS.len(), f.len())));
    }
    let int = |i: usize| -> Result<i64, TranscriptError> {
        f[i].parse().map_err(|_| perr(n, format!("{} is not an integer", COLUMNS[i])))
    };
    let agent = |i: usize| Agent::parse(f[i]).ok_or_else(|| perr(n, format!("unknown agent {:?}", f[i])));
    let seq = int(0)? as u64;
    let (kind_s, region) = match f[7].split_once('@') {
        Some((k, r)) => {
            let r: u32 = r.parse().map_err(|_| perr(n, "bad region in msg_type"))?;
            if r == 0 {
                return Err(perr(n, "region index 0"));
            }
            (k, Some(RegionId(r)))
        }
        None => (f[7], None),
    };
    let kind = MsgKind::parse(kind_s).ok_or_else(|| perr(n, format!("unknown msg_type {kind_s:?}")))?;
    if region.is_none() != (kind == MsgKind::Forward) {
        return Err(perr(n, "msg_type region tag missing or unexpected"));
    }
    let payload = hex::decode(f[8]).map_err(|e| perr(n, format!("payload_hex: {e}")))?;
    let bit_size = int(9)? as u64;
    Ok(Record {
        seq,
        sender: agent(1)?,
        receiver: agent(2)?,
        emit: SpacetimeEvent::new(int(3)?, int(4)?, seq),
        receive: SpacetimeEvent::new(int(5)?, int(6)?, seq),
        kind,
        region,
        payload,
        bit_size,
    })
}
