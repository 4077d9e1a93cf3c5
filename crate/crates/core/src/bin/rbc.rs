use clap::{Args, Parser, Subcommand};
use rbc_core::cli::{
    cmd_bounds, cmd_cheat_sim, cmd_cost, cmd_run, cmd_verify, save_report, CliError, CmdOutput, Config, EXIT_CONFIG,
    KEYS,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rbc", about = "Relativistic bit commitment simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Session seed; overrides RBC_SEED and the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Extra `key=value` override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one session and write its transcript.
    Run {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        bit: Option<u8>,
    },
    /// Estimate detection rates of a cheating strategy.
    CheatSim {
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Tabulate the analytic bounds.
    Bounds {
        /// Comma-separated values of M.
        #[arg(long, value_delimiter = ',', default_values_t = [2u64, 4, 8, 16, 40, 100, 200])]
        m: Vec<u64>,
    },
    /// Bits per round, round time and site separation.
    Cost {
        #[arg(long = "m-link")]
        m_link: Option<u64>,
        #[arg(long)]
        digits: Option<u64>,
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Check a transcript file offline.
    Verify { transcript: PathBuf },
    /// List configuration keys.
    Keys,
}

fn load(common: &Common) -> Result<Config, CliError> {
    let mut c = Config::from_env()?;
    if let Some(p) = &common.config {
        c.apply_file(p)?;
    }
    if let Some(s) = common.seed {
        c.seed = s;
    }
    for kv in &common.overrides {
        c.apply_override(kv)?;
    }
    if let Some(r) = &common.report {
        c.report = Some(r.clone());
    }
    Ok(c)
}

fn dispatch(cli: Cli) -> Result<CmdOutput, CliError> {
    let mut config = load(&cli.common)?;
    let out = match cli.command {
        Command::Run { out, bit } => {
            if let Some(p) = out {
                config.transcript = Some(p);
            }
            if let Some(b) = bit {
                config.set("bit", &b.to_string())?;
            }
            cmd_run(&config)?
        }
        Command::CheatSim { trials, strategy } => {
            if let Some(s) = strategy {
                config.strategy = s;
            }
            cmd_cheat_sim(&config, trials.unwrap_or(config.trials))?
        }
        Command::Bounds { m } => cmd_bounds(&m),
        Command::Cost { m_link, digits, rate } => {
            let user = if m_link.is_some() || digits.is_some() || rate.is_some() {
                let mut u = config.cost_inputs()?;
                u.m_link = m_link.unwrap_or(u.m_link);
                u.m_digits = digits.unwrap_or(u.m_digits);
                u.rate = rate.unwrap_or(u.rate);
                u.validate().map_err(|e| rbc_core::cli::ConfigError::Field {
                    key: "rate",
                    message: e.to_string(),
                })?;
                Some(u)
            } else {
                None
            };
            cmd_cost(user)
        }
        Command::Verify { transcript } => cmd_verify(&transcript)?,
        Command::Keys => {
            let mut s = String::from("key\tmeaning\n");
            for (k, v) in KEYS {
                s.push_str(&format!("{k}\t{v}\n"));
            }
            CmdOutput { report: s, code: 0 }
        }
    };
    save_report(&config, &out)?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(out) => {
            print!("{}", out.report);
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("rbc: {e}");
            ExitCode::from(match e.exit_code() {
                c @ 1..=255 => c as u8,
                _ => EXIT_CONFIG as u8,
            })
        }
    }
}
