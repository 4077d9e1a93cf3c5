//! Subcommand bodies for the `rbc` binary. Each returns its report text and
//! exit status so the binary stays a thin argument parser.

mod config;

pub use config::{Config, ConfigError, GeometryMode, KEYS, SEED_ENV};

use crate::adversary::{run_trials, strategy_by_name, STRATEGY_NAMES};
use crate::bounds::{
    cheat_success_bound_f64, classical_escape_oracle_f64, flip_count, lemma2_default, remark_approximation,
};
use crate::costmodel::{case_report, meter_transcript, round_time_for, separation_km_for, CostInputs};
use crate::protocol::{
    run_rbc1, run_rbc2, verify_session, CheckStatus, ProtocolError, ProtocolKind, SessionStatus, Transcript,
    TranscriptError, UnveilVerdict,
};
use crate::spacetime::RegionId;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
/// The session aborted or the transcript failed verification.
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("simulation failed: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Protocol(_) => EXIT_CONFIG,
            CliError::Transcript(_) | CliError::Io(_) => EXIT_INPUT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CmdOutput {
    pub report: String,
    pub code: i32,
}

fn ok(report: String) -> CmdOutput {
    CmdOutput { report, code: EXIT_OK }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes the report to `config.report` when set.
pub fn save_report(config: &Config, out: &CmdOutput) -> Result<(), CliError> {
    match &config.report {
        Some(p) => write_file(p, &out.report),
        None => Ok(()),
    }
}

fn sci(x: f64) -> String {
    format!("{x:.6e}")
}

/// Runs one session, writing its transcript to `config.transcript`.
pub fn cmd_run(config: &Config) -> Result<CmdOutput, CliError> {
    let session = config.session()?;
    let run = match session.kind {
        ProtocolKind::Rbc1 => run_rbc1(&session, config.bit)?,
        ProtocolKind::Rbc2 => {
            let strategy = strategy_by_name(&session.strategy).ok_or_else(|| ConfigError::Field {
                key: "strategy",
                message: format!("unknown strategy {:?}; expected one of {STRATEGY_NAMES:?}", session.strategy),
            })?;
            run_rbc2(&session, strategy.as_ref(), config.bit)?
        }
    };
    if let Some(p) = &config.transcript {
        run.transcript.write_to(p)?;
    }
    let mut out = String::from("field\tvalue\n");
    let o = &run.outcome;
    let _ = writeln!(out, "protocol\t{}", session.kind.as_str());
    let _ = writeln!(out, "seed\t{}", session.seed);
    let _ = writeln!(out, "strategy\t{}", session.strategy);
    let _ = writeln!(out, "status\t{}", o.status);
    let _ = writeln!(out, "rounds_completed\t{}", o.rounds_completed);
    let _ = writeln!(out, "records\t{}", run.transcript.records.len());
    let _ = writeln!(out, "causality_violations\t{}", o.report.violations.len());
    if let Some(ev) = o.report.event {
        let _ = writeln!(out, "verified_by\t{}", ev.agent);
        let _ = writeln!(out, "verified_at\t{}", ev.time);
    }
    match meter_transcript(&run.transcript) {
        Ok(meter) => {
            for r in meter.regions.values() {
                let _ = writeln!(out, "bits_{}\t{}", r.region, r.total());
            }
            let _ = writeln!(out, "bits_coordination\t{}", meter.coordination);
        }
        Err(e) => {
            let _ = writeln!(out, "meter_error\t{e}");
        }
    }
    let code = if o.is_aborted() { EXIT_REJECTED } else { EXIT_OK };
    Ok(CmdOutput { report: out, code })
}

/// Offline check of a transcript file.
pub fn cmd_verify(path: &Path) -> Result<CmdOutput, CliError> {
    let transcript = Transcript::read_from(path)?;
    let report = verify_session(&transcript);
    let mut out = String::from("field\tvalue\n");
    let status = report.status();
    let _ = writeln!(out, "status\t{status}");
    for (k, s) in &report.link_checks {
        let v = match s {
            CheckStatus::Incomplete => "incomplete".to_string(),
            CheckStatus::Pass { at } => format!("pass@{at}"),
            CheckStatus::Fail { at, reason } => format!("fail@{at}: {reason}"),
        };
        let _ = writeln!(out, "link_{}\t{v}", RegionId::p(*k));
    }
    match &report.unveil {
        Some(UnveilVerdict::Accept(b)) => {
            let _ = writeln!(out, "unveil\taccept({b})");
        }
        Some(UnveilVerdict::Reject(r)) => {
            let _ = writeln!(out, "unveil\treject: {r}");
        }
        None => {
            let _ = writeln!(out, "unveil\tnone");
        }
    }
    for v in &report.violations {
        let _ = writeln!(out, "violation\t{}: {v}", v.kind());
    }
    for e in &report.decode_errors {
        let _ = writeln!(out, "malformed\t{e}");
    }
    let metered = match meter_transcript(&transcript) {
        Ok(m) => {
            let _ = writeln!(out, "bits_total\t{}", m.regions.values().map(|r| r.total()).sum::<u64>());
            true
        }
        Err(e) => {
            let _ = writeln!(out, "meter_error\t{e}");
            false
        }
    };
    let clean = report.is_clean() && metered && !matches!(status, SessionStatus::Aborted(_));
    let _ = writeln!(out, "clean\t{clean}");
    Ok(CmdOutput {
        report: out,
        code: if clean { EXIT_OK } else { EXIT_REJECTED },
    })
}

/// Bound table, one row per `M`.
pub fn cmd_bounds(ms: &[u64]) -> CmdOutput {
    let mut out = String::from("M\tcheat_bound\tlemma2_bound\tremark_approx\tflip_count\tflip_oracle\n");
    for &m in ms {
        let cheat = cheat_success_bound_f64(m).map(sci).unwrap_or_else(|_| "unavailable".into());
        let l2 = lemma2_default(m).map(sci).unwrap_or_else(|_| "unavailable".into());
        let oracle = classical_escape_oracle_f64(m).map(sci).unwrap_or_else(|_| "unavailable".into());
        let _ = writeln!(
            out,
            "{m}\t{cheat}\t{l2}\t{}\t{}\t{oracle}",
            sci(remark_approximation(m)),
            flip_count(m)
        );
    }
    ok(out)
}

fn cost_row(out: &mut String, case: &str, inputs: &CostInputs, bits: f64, note: &str) {
    let r = case_report(*inputs);
    let _ = writeln!(
        out,
        "{case}\t{}\t{}\t{}\t{}\t{:.3}\t{}\t{}\t{}\t{}\t{:.4}\t{note}",
        inputs.m_link,
        inputs.m_digits,
        sci(inputs.rate),
        r.site1_exact,
        r.site1_approx,
        r.site2,
        bits,
        sci(bits / inputs.rate),
        sci(round_time_for(bits, inputs)),
        separation_km_for(bits, inputs)
    );
}

/// Cases I and II in both readings, plus an optional user row.
pub fn cmd_cost(user: Option<CostInputs>) -> CmdOutput {
    let mut out = String::from(
        "case\tM\tm\trate\tsite1_exact\tsite1_approx\tsite2\tbits\ttransmit_s\tround_s\tseparation_km\tnote\n",
    );
    let one = CostInputs::case_one();
    let one_r = case_report(one);
    cost_row(&mut out, "I", &one, one_r.site2 as f64, "site-2 channel 8Mm^2");
    cost_row(&mut out, "I", &one, one_r.max_bits as f64, "exact maximum over both sites");
    let two = CostInputs::case_two();
    let two_r = case_report(two);
    cost_row(&mut out, "II", &two, two_r.max_bits as f64, "exact maximum over both sites");
    cost_row(&mut out, "II", &two, 1e4, "rounded to 10^4 bits");
    if let Some(u) = user {
        let r = case_report(u);
        cost_row(&mut out, "user", &u, r.max_bits as f64, "exact maximum over both sites");
    }
    ok(out)
}

/// Monte Carlo detection statistics for the configured strategy.
pub fn cmd_cheat_sim(config: &Config, trials: u64) -> Result<CmdOutput, CliError> {
    let mut config = config.clone();
    config.protocol = ProtocolKind::Rbc2;
    let session = config.session()?;
    let strategy = strategy_by_name(&session.strategy).ok_or_else(|| ConfigError::Field {
        key: "strategy",
        message: format!("unknown strategy {:?}; expected one of {STRATEGY_NAMES:?}", session.strategy),
    })?;
    if trials == 0 {
        return Err(ConfigError::Field {
            key: "trials",
            message: "must be at least 1".into(),
        }
        .into());
    }
    let stats = run_trials(strategy.as_ref(), &session, trials, session.seed)?;
    let m = session.m() as u64;
    let oracle = match session.strategy.as_str() {
        "flip" if session.unveil_at.is_none() => classical_escape_oracle_f64(m).ok(),
        "honest" => Some(1.0),
        _ => None,
    };
    let (lo, hi) = stats.escape_interval(1.96);
    let l2 = lemma2_default(m).ok();
    let mut out = String::from(
        "strategy\tM\ttrials\tcaught\tescaped_with_flip\tescaped_consistent\tescape_rate\tsigma\twilson95_lo\twilson95_hi\toracle\toracle_z\tlemma2_bound\twithin_4x_lemma2\n",
    );
    let oracle_z = oracle.map(|o| {
        let s = (o * (1.0 - o) / stats.trials as f64).sqrt();
        if s == 0.0 {
            if (stats.escape_rate() - o).abs() == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            (stats.escape_rate() - o) / s
        }
    });
    let opt = |x: Option<f64>, f: fn(f64) -> String| x.map(f).unwrap_or_else(|| "-".into());
    let _ = writeln!(
        out,
        "{}\t{m}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        session.strategy,
        stats.trials,
        stats.caught,
        stats.escaped_with_flip,
        stats.escaped_consistent,
        sci(stats.escape_rate()),
        sci(stats.sigma()),
        sci(lo),
        sci(hi),
        opt(oracle, sci),
        opt(oracle_z, |z| format!("{z:.3}")),
        opt(l2, sci),
        l2.map_or("-".to_string(), |b| (stats.escape_rate() <= 4.0 * b).to_string()),
    );
    out.push_str("\nregion\tcaught\n");
    for (r, n) in &stats.failures_by_region {
        let label = if *r == 0 { "malformed".to_string() } else { RegionId(*r).to_string() };
        let _ = writeln!(out, "{label}\t{n}");
    }
    Ok(ok(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_rows() {
        let t = cmd_bounds(&[2, 3, 40, 200]).report;
        let rows: Vec<Vec<&str>> = t.lines().skip(1).map(|l| l.split('\t').collect()).collect();
        assert_eq!(rows[0][1], "8.333333e-1");
        assert_eq!(rows[1][1], "unavailable");
        assert_eq!(rows[2][1], "2.367232e-2");
        assert_eq!(rows[3][1], "7.319229e-9");
    }

    #[test]
    fn cost_rows() {
        let t = cmd_cost(None).report;
        assert!(t.lines().any(|l| l.starts_with("II\t200\t2\t") && l.split('\t').nth(4) == Some("7041")));
        assert!(t.lines().any(|l| l.starts_with("I\t40\t2\t") && l.split('\t').nth(7) == Some("1280")));
    }

    #[test]
    fn run_default_unveils() {
        let out = cmd_run(&Config::default()).unwrap();
        assert_eq!(out.code, EXIT_OK);
        assert!(out.report.contains("status\tunveiled(0)"));
    }
}
