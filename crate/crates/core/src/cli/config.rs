//! Flat `key = value` configuration.
//!
//! Later sources win: built-in defaults, `RBC_SEED`, the config file, then
//! command-line overrides. Unknown keys are errors so typos do not silently
//! fall back to defaults.

use crate::costmodel::CostInputs;
use crate::elementary::ProtocolParams;
use crate::protocol::{ProtocolKind, SessionConfig, DEFAULT_BUDGET};
use crate::rudich::RudichParams;
use crate::spacetime::{Geometry, DEFAULT_SEPARATION_FACTOR};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const SEED_ENV: &str = "RBC_SEED";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{path}:{line}: {message}")]
    Syntax { path: String, line: usize, message: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("{key}: {message}")]
    Field { key: &'static str, message: String },
    #[error("cannot read {0}")]
    Io(String),
}

fn field(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        key,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryMode {
    Manual,
    /// `delta_x` derived from `delta_t` and `round_fraction`.
    Auto,
}

/// Keys, with the symbol each one stands for.
pub const KEYS: &[(&str, &str)] = &[
    ("protocol", "rbc1 (chained) or rbc2 (linked redundant)"),
    ("N", "modulus N of every elementary commitment"),
    ("M", "linking security parameter M"),
    ("gamma_M", "integer gamma*M in the effectiveness thresholds"),
    ("zero_convention", "1 if every challenge pair has n_0 = 0"),
    ("rounds", "number of regions P1, Q1, P2, ... (RBC1: chain depth)"),
    ("unveil_at", "region index of the unveiling, or never"),
    ("bit", "Alice's committed bit b"),
    ("strategy", "honest, flip or uncommitted"),
    ("seed", "session seed"),
    ("geometry", "manual or auto"),
    ("x1", "position of site 1"),
    ("delta", "laboratory radius delta"),
    ("delta_x", "site separation Delta x"),
    ("delta_t", "region length Delta t"),
    ("separation_factor", "required Delta x / Delta t"),
    ("intra_latency", "same-site A-B delay, at most 2 delta"),
    ("budget", "cap on total RBC1 commitments"),
    ("rate", "link rate in bits per second"),
    ("processing_factor", "round time multiplier for processing"),
    ("round_fraction", "round time as a fraction of the light travel time between sites"),
    ("trials", "Monte Carlo trials for cheat-sim"),
    ("transcript", "transcript output path"),
    ("report", "report output path"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub protocol: ProtocolKind,
    pub modulus: u64,
    pub m: usize,
    pub gamma_m: Option<usize>,
    pub zero_convention: bool,
    pub rounds: u32,
    pub unveil_at: Option<u32>,
    pub bit: u8,
    pub strategy: String,
    pub seed: u64,
    pub geometry: GeometryMode,
    pub x1: i64,
    pub delta: i64,
    pub delta_x: i64,
    pub delta_t: i64,
    pub separation_factor: i64,
    pub intra_latency: i64,
    pub budget: u64,
    pub rate: f64,
    pub processing_factor: f64,
    pub round_fraction: f64,
    pub trials: u64,
    pub transcript: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            protocol: ProtocolKind::Rbc2,
            modulus: 4,
            m: 4,
            gamma_m: None,
            zero_convention: true,
            rounds: 4,
            unveil_at: Some(4),
            bit: 0,
            strategy: "honest".into(),
            seed: 0,
            geometry: GeometryMode::Manual,
            x1: 0,
            delta: 1,
            delta_x: 100,
            delta_t: 10,
            separation_factor: DEFAULT_SEPARATION_FACTOR,
            intra_latency: 1,
            budget: DEFAULT_BUDGET,
            rate: 1e10,
            processing_factor: 3.0,
            round_fraction: 0.1,
            trials: 10_000,
            transcript: None,
            report: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| field(key, format!("cannot parse {v:?}")))
}

impl Config {
    /// Defaults with the seed taken from `RBC_SEED` when set.
    pub fn from_env() -> Result<Self, ConfigError> {
        let mut c = Config::default();
        if let Ok(s) = std::env::var(SEED_ENV) {
            c.seed = s.trim().parse().map_err(|_| field("seed", format!("{SEED_ENV}={s:?} is not a u64")))?;
        }
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "protocol" => {
                self.protocol = ProtocolKind::parse(v).ok_or_else(|| field("protocol", format!("unknown protocol {v:?}")))?
            }
            "N" => self.modulus = parse_num("N", v)?,
            "M" => self.m = parse_num("M", v)?,
            "gamma_M" => self.gamma_m = Some(parse_num("gamma_M", v)?),
            "zero_convention" => self.zero_convention = parse_num::<u8>("zero_convention", v)? != 0,
            "rounds" => self.rounds = parse_num("rounds", v)?,
            "unveil_at" => {
                self.unveil_at = match v {
                    "never" | "none" => None,
                    _ => Some(parse_num("unveil_at", v)?),
                }
            }
            "bit" => {
                self.bit = parse_num("bit", v)?;
                if self.bit > 1 {
                    return Err(field("bit", "must be 0 or 1"));
                }
            }
            "strategy" => self.strategy = v.to_string(),
            "seed" => self.seed = parse_num("seed", v)?,
            "geometry" => {
                self.geometry = match v {
                    "manual" => GeometryMode::Manual,
                    "auto" => GeometryMode::Auto,
                    _ => return Err(field("geometry", format!("expected manual or auto, got {v:?}"))),
                }
            }
            "x1" => self.x1 = parse_num("x1", v)?,
            "delta" => self.delta = parse_num("delta", v)?,
            "delta_x" => self.delta_x = parse_num("delta_x", v)?,
            "delta_t" => self.delta_t = parse_num("delta_t", v)?,
            "separation_factor" => self.separation_factor = parse_num("separation_factor", v)?,
            "intra_latency" => self.intra_latency = parse_num("intra_latency", v)?,
            "budget" => self.budget = parse_num("budget", v)?,
            "rate" => self.rate = parse_num("rate", v)?,
            "processing_factor" => self.processing_factor = parse_num("processing_factor", v)?,
            "round_fraction" => self.round_fraction = parse_num("round_fraction", v)?,
            "trials" => self.trials = parse_num("trials", v)?,
            "transcript" => self.transcript = Some(PathBuf::from(v)),
            "report" => self.report = Some(PathBuf::from(v)),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: String| ConfigError::Syntax {
                path: origin.to_string(),
                line: i + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| syntax(format!("expected key = value, got {line:?}")))?;
            self.set(k.trim(), v).map_err(|e| syntax(e.to_string()))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Applies a `key=value` override from the command line.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), ConfigError> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax {
                path: "--set".into(),
                line: 1,
                message: format!("expected key=value, got {kv:?}"),
            })?;
        self.set(k.trim(), v)
    }

    pub fn cost_inputs(&self) -> Result<CostInputs, ConfigError> {
        let c = CostInputs {
            m_link: self.m as u64,
            m_digits: u64::from(ProtocolParams::new(self.modulus).map_err(|e| field("N", e.to_string()))?.digits()),
            rate: self.rate,
            processing_factor: self.processing_factor,
            round_fraction: self.round_fraction,
        };
        c.validate().map_err(|e| {
            let key = match e {
                crate::costmodel::CostError::Rate(_) => "rate",
                crate::costmodel::CostError::RoundFraction(_) => "round_fraction",
                crate::costmodel::CostError::ProcessingFactor(_) => "processing_factor",
                crate::costmodel::CostError::ZeroM => "M",
            };
            field(key, e.to_string())
        })?;
        Ok(c)
    }

    pub fn geometry(&self) -> Result<Geometry, ConfigError> {
        let delta_x = match self.geometry {
            GeometryMode::Manual => self.delta_x,
            GeometryMode::Auto => {
                if !(self.round_fraction > 0.0 && self.round_fraction <= 1.0) {
                    return Err(field("round_fraction", "must lie in (0, 1]"));
                }
                let from_fraction = (self.delta_t as f64 / self.round_fraction).ceil() as i64;
                from_fraction.max(self.separation_factor * self.delta_t)
            }
        };
        Geometry::with_options(
            self.x1,
            self.delta,
            delta_x,
            self.delta_t,
            self.separation_factor,
            self.intra_latency,
        )
        .map_err(|e| field("geometry", e.to_string()))
    }

    /// Re-validates everything and builds the session config.
    pub fn session(&self) -> Result<SessionConfig, ConfigError> {
        let params = ProtocolParams::new(self.modulus)
            .map_err(|e| field("N", e.to_string()))?
            .with_zero_convention(self.zero_convention);
        let m = match self.protocol {
            ProtocolKind::Rbc1 => 1,
            ProtocolKind::Rbc2 => self.m,
        };
        let rudich = match self.gamma_m {
            Some(g) => RudichParams::with_gamma(m, g).map_err(|e| field("gamma_M", e.to_string()))?,
            None => RudichParams::new(m).map_err(|e| field("M", e.to_string()))?,
        };
        let cfg = SessionConfig {
            kind: self.protocol,
            params,
            rudich,
            rounds: self.rounds,
            unveil_at: self.unveil_at,
            geometry: self.geometry()?,
            seed: self.seed,
            strategy: self.strategy.clone(),
            budget: self.budget,
        };
        cfg.validate().map_err(|e| {
            use crate::protocol::ProtocolError as P;
            let key = match e {
                P::TooFewRounds { .. } => "rounds",
                P::UnveilAtZero | P::ScheduleExhausted { .. } => "unveil_at",
                P::BudgetExceeded { .. } => "budget",
                P::LatencyTooLarge { .. } => "intra_latency",
                _ => "geometry",
            };
            field(key, e.to_string())
        })?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = Config::default();
        let s = c.session().unwrap();
        assert_eq!(s.geometry.delta_x, 100);
        assert_eq!(s.rounds, 4);
    }

    #[test]
    fn text_and_errors() {
        let mut c = Config::default();
        c.apply_text("# comment\nM = 8\nunveil_at = never  # trailing\n", "t").unwrap();
        assert_eq!((c.m, c.unveil_at), (8, None));
        let e = c.apply_text("M = 8\nbogus = 1\n", "t").unwrap_err();
        assert!(e.to_string().starts_with("t:2:"), "{e}");
        let e = c.apply_text("rounds three\n", "t").unwrap_err();
        assert!(e.to_string().contains("t:1"));
        assert!(matches!(c.set("bit", "2"), Err(ConfigError::Field { key: "bit", .. })));
    }

    #[test]
    fn short_regions_name_the_constraint() {
        let mut c = Config::default();
        c.set("delta_t", "4").unwrap();
        let e = c.session().unwrap_err().to_string();
        assert!(e.contains("4*delta"), "{e}");
    }

    #[test]
    fn auto_geometry() {
        let mut c = Config::default();
        c.set("geometry", "auto").unwrap();
        c.set("delta_x", "1").unwrap();
        c.set("round_fraction", "0.05").unwrap();
        assert_eq!(c.geometry().unwrap().delta_x, 200);
        c.set("round_fraction", "0.5").unwrap();
        assert_eq!(c.geometry().unwrap().delta_x, 100);
    }
}
