//! Session simulation for the chained protocol (RBC1) and the linked
//! redundant protocol (RBC2).
//!
//! Four agents sit at two sites: A1 and B1 at site 1, A2 and B2 at site 2.
//! Bob opens every region with a challenge; Alice's agents only react to
//! what has reached them. Each Bob agent forwards every record it sends or
//! receives to its partner, and checks are evaluated by whichever Bob agent
//! holds all the inputs, at the time the last of them arrives.

mod deniability;
mod engine;
mod message;
mod strategy;
mod tape;
mod transcript;
mod verify;

pub use deniability::{check_account, fabricate_account, AccountError, AlternativeAccount, ElementaryAccount};
pub use engine::{run_rbc1, run_rbc2, run_session, AliceView, SessionRun};
pub use message::{decode_injection, encode_injection, expected_bits, DecodeError, Message, MsgKind};
pub use strategy::{BatchContext, DeclareContext, KnowledgeEntry, KnowledgeView, Strategy};
pub use tape::{AliceTape, Tag};
pub use transcript::{Record, Transcript, TranscriptError};
pub use verify::{
    decoded_messages, verify_session, verify_unveiling, BobView, CheckStatus, UnveilVerdict, VerificationEvent,
    VerificationReport,
};

use crate::elementary::{ElementaryError, ProtocolParams};
use crate::rudich::{RudichError, RudichParams};
use crate::spacetime::{make_schedule, Geometry, RegionId, RegionSchedule, Site, SpacetimeError};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error(transparent)]
    Elementary(#[from] ElementaryError),
    #[error(transparent)]
    Rudich(#[from] RudichError),
    #[error("unveil_at = {unveil_at} lies beyond the last region {rounds}")]
    ScheduleExhausted { unveil_at: u32, rounds: u32 },
    #[error("rounds = {rounds} is below the minimum of {min}")]
    TooFewRounds { rounds: u32, min: u32 },
    #[error("unveil_at must be at least 1")]
    UnveilAtZero,
    #[error("{needed} commitments exceed the budget of {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("intra-site latency {latency} leaves no room for the six linking hops in delta_t = {delta_t}")]
    LatencyTooLarge { latency: i64, delta_t: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Agent {
    A1,
    A2,
    B1,
    B2,
}

impl Agent {
    pub fn site(self) -> Site {
        match self {
            Agent::A1 | Agent::B1 => Site::One,
            Agent::A2 | Agent::B2 => Site::Two,
        }
    }

    pub fn is_bob(self) -> bool {
        matches!(self, Agent::B1 | Agent::B2)
    }

    pub fn alice_at(site: Site) -> Agent {
        match site {
            Site::One => Agent::A1,
            Site::Two => Agent::A2,
        }
    }

    pub fn bob_at(site: Site) -> Agent {
        match site {
            Site::One => Agent::B1,
            Site::Two => Agent::B2,
        }
    }

    pub fn parse(s: &str) -> Option<Agent> {
        Some(match s {
            "A1" => Agent::A1,
            "A2" => Agent::A2,
            "B1" => Agent::B1,
            "B2" => Agent::B2,
            _ => return None,
        })
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Agent::A1 => "A1",
            Agent::A2 => "A2",
            Agent::B1 => "B1",
            Agent::B2 => "B2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Rbc1,
    Rbc2,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Rbc1 => "rbc1",
            ProtocolKind::Rbc2 => "rbc2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rbc1" => Some(ProtocolKind::Rbc1),
            "rbc2" => Some(ProtocolKind::Rbc2),
            _ => None,
        }
    }
}

pub const DEFAULT_BUDGET: u64 = 1 << 20;

/// Everything needed to replay or decode a session except Alice's bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub kind: ProtocolKind,
    pub params: ProtocolParams,
    pub rudich: RudichParams,
    /// Number of regions P1, Q1, P2, ... to run.
    pub rounds: u32,
    /// Region index at which Alice unveils.
    pub unveil_at: Option<u32>,
    pub geometry: Geometry,
    pub seed: u64,
    pub strategy: String,
    /// Cap on the total number of RBC1 commitments.
    pub budget: u64,
}

impl SessionConfig {
    pub fn rbc2(modulus: u64, m: usize, rounds: u32, unveil_at: Option<u32>, seed: u64) -> Result<Self, ProtocolError> {
        let cfg = SessionConfig {
            kind: ProtocolKind::Rbc2,
            params: ProtocolParams::new(modulus)?,
            rudich: RudichParams::new(m)?,
            rounds,
            unveil_at,
            geometry: default_geometry(),
            seed,
            strategy: "honest".into(),
            budget: DEFAULT_BUDGET,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn rbc1(modulus: u64, depth: u32, unveil_at: Option<u32>, seed: u64) -> Result<Self, ProtocolError> {
        let cfg = SessionConfig {
            kind: ProtocolKind::Rbc1,
            params: ProtocolParams::new(modulus)?,
            rudich: RudichParams::new(1)?,
            rounds: depth,
            unveil_at,
            geometry: default_geometry(),
            seed,
            strategy: "honest".into(),
            budget: DEFAULT_BUDGET,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        self.geometry.validate()?;
        let min = match self.kind {
            ProtocolKind::Rbc1 => 1,
            ProtocolKind::Rbc2 => 2,
        };
        if self.rounds < min {
            return Err(ProtocolError::TooFewRounds { rounds: self.rounds, min });
        }
        if let Some(u) = self.unveil_at {
            if u == 0 {
                return Err(ProtocolError::UnveilAtZero);
            }
            if u > self.rounds || (u == 1 && self.rounds < 2) {
                return Err(ProtocolError::ScheduleExhausted {
                    unveil_at: u,
                    rounds: self.rounds,
                });
            }
        }
        let hops = match self.kind {
            ProtocolKind::Rbc1 => 2,
            ProtocolKind::Rbc2 => 6,
        };
        if hops * self.geometry.intra_latency > self.geometry.delta_t {
            return Err(ProtocolError::LatencyTooLarge {
                latency: self.geometry.intra_latency,
                delta_t: self.geometry.delta_t,
            });
        }
        if self.kind == ProtocolKind::Rbc1 {
            let needed = self.rbc1_total_commitments();
            if needed > self.budget {
                return Err(ProtocolError::BudgetExceeded {
                    needed,
                    budget: self.budget,
                });
            }
        }
        self.schedule()?;
        Ok(())
    }

    pub fn schedule(&self) -> Result<RegionSchedule, SpacetimeError> {
        make_schedule(&self.geometry, self.rounds.div_ceil(2), 0)
    }

    /// Last region in which anything happens.
    pub fn last_region(&self) -> u32 {
        match self.unveil_at {
            Some(1) => 2,
            Some(u) => u,
            None => self.rounds,
        }
    }

    pub fn m(&self) -> usize {
        self.rudich.m()
    }

    pub fn digits(&self) -> usize {
        self.params.digits() as usize
    }

    /// Bit pairs in the batch made in `P_k`.
    pub fn batch_pairs(&self, k: u32) -> usize {
        if k == 1 {
            self.m()
        } else {
            2 * self.m()
        }
    }

    /// Elementary commitments in the batch made in `P_k`.
    pub fn batch_elems(&self, k: u32) -> usize {
        2 * self.batch_pairs(k)
    }

    /// RBC1 commitments made in region `r`.
    pub fn rbc1_level_size(&self, r: u32) -> u64 {
        (self.digits() as u64).saturating_pow(r - 1)
    }

    pub fn rbc1_total_commitments(&self) -> u64 {
        (1..=self.last_region())
            .map(|r| self.rbc1_level_size(r))
            .fold(0u64, |a, b| a.saturating_add(b))
    }

    /// Number of values carried by an Unveil sent in `region`.
    pub fn unveil_len(&self, region: RegionId) -> usize {
        let m = self.digits();
        match self.kind {
            ProtocolKind::Rbc1 => {
                if region.0 == 1 {
                    m
                } else {
                    self.rbc1_level_size(region.0 - 1) as usize
                }
            }
            ProtocolKind::Rbc2 => {
                if region.is_p() {
                    2 * self.m() * m
                } else {
                    self.batch_elems(region.round())
                }
            }
        }
    }

    /// Number of entries in a Challenge or Reply in `region`.
    pub fn challenge_len(&self, region: RegionId) -> usize {
        match self.kind {
            ProtocolKind::Rbc1 => self.rbc1_level_size(region.0) as usize,
            ProtocolKind::Rbc2 => {
                let k = region.round();
                if region.is_p() {
                    self.batch_elems(k)
                } else {
                    self.batch_elems(k) * self.digits()
                }
            }
        }
    }
}

/// `delta = 1`, `delta_t = 10`, `delta_x = 100`, intra-site latency 1.
pub fn default_geometry() -> Geometry {
    Geometry::with_options(0, 1, 100, 10, crate::spacetime::DEFAULT_SEPARATION_FACTOR, 1).expect("constant geometry")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionStatus {
    Sustained,
    Unveiled(u8),
    Aborted(String),
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionStatus::Sustained => f.write_str("sustained"),
            SessionStatus::Unveiled(b) => write!(f, "unveiled({b})"),
            SessionStatus::Aborted(r) => write!(f, "aborted({r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub status: SessionStatus,
    /// Regions in which Bob issued a challenge.
    pub rounds_completed: u32,
    pub report: VerificationReport,
}

impl SessionOutcome {
    pub fn is_aborted(&self) -> bool {
        matches!(self.status, SessionStatus::Aborted(_))
    }
}
