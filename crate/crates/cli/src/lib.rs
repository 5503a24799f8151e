//! Command logic behind the `srgp` binary: scenario runs and file-backed
//! approval sessions.
//!
//! Exit codes: 0 success, 2 usage or bad input, 3 I/O or damaged session
//! state, 4 session exhausted.

use std::fs::{self, File, TryLockError};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use srgp::protocol::{read_audit_log, Report};
use srgp::{ApprovalSession, SessionConfig, SessionError, SessionInputs};
use srgp_simlab::{run_scenario, write_outputs, ScenarioConfig, SimError};
use thiserror::Error;

/// Overrides the Monte Carlo budget of configurations that do not set one.
pub const BUDGET_ENV: &str = "SRGP_MC_BUDGET";

const AUDIT_FILE: &str = "audit.jsonl";
const CONFIG_FILE: &str = "session.toml";
const LOCK_FILE: &str = "session.lock";

#[derive(Debug, Parser)]
#[command(name = "srgp", version, about = "Sequential approval of model updates on a reusable test set")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation scenario and write summary.json, replicates.csv and trajectories.csv.
    Simulate {
        /// Scenario configuration (TOML).
        config: PathBuf,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every core. Results do not depend on it.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Create a session directory from a session configuration.
    SessionInit {
        /// Session configuration (TOML); relative paths are resolved against its directory.
        config: PathBuf,
        #[arg(long)]
        dir: PathBuf,
    },
    /// Test one model; prints APPROVED or DENIED and nothing else.
    SessionSubmit {
        dir: PathBuf,
        /// Test-set scores of the candidate, one per line.
        predictions: PathBuf,
    },
    /// Print submissions, approvals and the current margin as JSON.
    SessionStatus { dir: PathBuf },
    /// Write report.csv and report.json for a session.
    Report {
        dir: PathBuf,
        /// Include node weights, thresholds and p-values.
        #[arg(long)]
        unblind: bool,
        /// Output directory; defaults to the session directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Exhausted(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Exhausted(_) => 4,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        let msg = e.to_string();
        match e {
            SessionError::Exhausted(_) => CliError::Exhausted(msg),
            SessionError::Config(_)
            | SessionError::Misaligned { .. }
            | SessionError::Prespecified(_)
            | SessionError::InputMismatch(_)
            | SessionError::Stats(_) => CliError::Usage(msg),
            SessionError::Io(_)
            | SessionError::Json(_)
            | SessionError::CorruptLog(_)
            | SessionError::DigestMismatch(_)
            | SessionError::DecisionMismatch(_) => CliError::Io(msg),
            SessionError::Graph(_) | SessionError::Threshold(_) => CliError::Internal(msg),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let msg = e.to_string();
        match e {
            SimError::Config(_) | SimError::Stats(_) => CliError::Usage(msg),
            SimError::Session(s) => s.into(),
            SimError::Io(_) | SimError::Csv(_) | SimError::Json(_) => CliError::Io(msg),
            SimError::Fit(_) | SimError::Pool(_) => CliError::Internal(msg),
        }
    }
}

fn io_error(what: &str, path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{what} {}: {e}", path.display()))
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} {} does not exist", path.display())))
    }
}

/// Reads a TOML configuration, inserting the environment's budget when the
/// file does not set `mc_budget`.
fn read_config_text(path: &Path) -> Result<String, CliError> {
    require_file(path, "configuration file")?;
    let text = fs::read_to_string(path).map_err(|e| io_error("cannot read", path, e))?;
    let Ok(budget) = std::env::var(BUDGET_ENV) else {
        return Ok(text);
    };
    let budget: i64 = budget
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{BUDGET_ENV} must be an integer, got {budget:?}")))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Usage(format!("cannot parse {}: {e}", path.display())))?;
    if !table.contains_key("mc_budget") {
        table.insert("mc_budget".into(), toml::Value::Integer(budget));
    }
    Ok(table.to_string())
}

/// Exclusive advisory lock on a session directory, released when dropped
/// (or when the process dies).
struct SessionLock {
    _file: File,
}

impl SessionLock {
    fn acquire(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(LOCK_FILE);
        let file = File::create(&path).map_err(|e| io_error("cannot create lock file", &path, e))?;
        match file.try_lock() {
            Ok(()) => Ok(Self { _file: file }),
            Err(TryLockError::WouldBlock) => Err(CliError::Io(format!(
                "session {} is in use by another process",
                dir.display()
            ))),
            Err(TryLockError::Error(e)) => Err(io_error("cannot lock", &path, e)),
        }
    }
}

fn session_dir(dir: &Path) -> Result<PathBuf, CliError> {
    let audit = dir.join(AUDIT_FILE);
    if !audit.is_file() {
        return Err(CliError::Usage(format!(
            "{} is not a session directory (run session-init first)",
            dir.display()
        )));
    }
    Ok(audit)
}

/// Runs one command. Whatever it prints for the user is returned as text.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Simulate {
            config,
            replicates,
            seed,
            out,
            threads,
        } => simulate(&config, replicates, seed, &out, threads),
        Command::SessionInit { config, dir } => session_init(&config, &dir),
        Command::SessionSubmit { dir, predictions } => session_submit(&dir, &predictions),
        Command::SessionStatus { dir } => session_status(&dir),
        Command::Report { dir, unblind, out } => report(&dir, unblind, out.as_deref()),
    }
}

fn simulate(
    config: &Path,
    replicates: Option<usize>,
    seed: Option<u64>,
    out: &Path,
    threads: usize,
) -> Result<String, CliError> {
    let mut scenario = ScenarioConfig::from_toml(&read_config_text(config)?)?;
    if let Some(r) = replicates {
        scenario.replicates = r;
    }
    if let Some(s) = seed {
        scenario.seed = s;
    }
    scenario.validate()?;
    fs::create_dir_all(out).map_err(|e| io_error("cannot create", out, e))?;
    let result = run_scenario(&scenario, threads)?;
    write_outputs(&result, out)?;
    let mut text = String::new();
    for s in &result.summaries {
        text += &format!(
            "{:<13} fwer {:.3}  approvals {:.2}  submissions {:.2}\n",
            s.policy.name(),
            s.fwer,
            s.mean_approvals,
            s.mean_submissions
        );
    }
    Ok(text)
}

fn session_init(config_path: &Path, dir: &Path) -> Result<String, CliError> {
    let mut config = SessionConfig::from_toml(&read_config_text(config_path)?).map_err(SessionError::from)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let base = fs::canonicalize(if base.as_os_str().is_empty() { Path::new(".") } else { base })
        .map_err(|e| io_error("cannot resolve", base, e))?;
    config.resolve_paths(&base);
    config.validate_files().map_err(SessionError::from)?;
    for p in [&config.dataset, &config.baseline, &config.prespecified].into_iter().flatten() {
        require_file(p, "input file")?;
    }
    fs::create_dir_all(dir).map_err(|e| io_error("cannot create", dir, e))?;
    let _lock = SessionLock::acquire(dir)?;
    let audit = dir.join(AUDIT_FILE);
    if audit.exists() {
        return Err(CliError::Usage(format!("{} already holds a session", dir.display())));
    }
    let inputs = SessionInputs::load(&config)?;
    ApprovalSession::open_logged(config.clone(), inputs, &audit)?;
    let copy = dir.join(CONFIG_FILE);
    fs::write(&copy, config.to_toml()).map_err(|e| io_error("cannot write", &copy, e))?;
    Ok(format!(
        "initialized {} session with {} tests in {}\n",
        config.policy.name(),
        config.horizon,
        dir.display()
    ))
}

fn resume(dir: &Path) -> Result<ApprovalSession, CliError> {
    let audit = session_dir(dir)?;
    Ok(ApprovalSession::resume(&audit, SessionInputs::load)?)
}

fn session_submit(dir: &Path, predictions: &Path) -> Result<String, CliError> {
    session_dir(dir)?;
    require_file(predictions, "prediction file")?;
    let _lock = SessionLock::acquire(dir)?;
    let mut session = resume(dir)?;
    if session.status().exhausted {
        return Err(SessionError::Exhausted(session.config().horizon).into());
    }
    let scores = srgp::stats::read_predictions(predictions).map_err(SessionError::from)?;
    let approved = session.submit_model(&scores)?;
    Ok(if approved { "APPROVED\n" } else { "DENIED\n" }.to_string())
}

fn session_status(dir: &Path) -> Result<String, CliError> {
    session_dir(dir)?;
    let _lock = SessionLock::acquire(dir)?;
    let session = resume(dir)?;
    let json = serde_json::to_string_pretty(&session.status()).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(json + "\n")
}

fn report(dir: &Path, unblind: bool, out: Option<&Path>) -> Result<String, CliError> {
    let audit = session_dir(dir)?;
    let _lock = SessionLock::acquire(dir)?;
    let (header, records) = read_audit_log(&audit)?;
    let report = Report::from_records(&header.config, &records, unblind);
    let out = out.unwrap_or(dir);
    fs::create_dir_all(out).map_err(|e| io_error("cannot create", out, e))?;
    let csv_path = out.join("report.csv");
    let mut csv = Vec::new();
    report
        .write_csv(&mut csv)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    fs::write(&csv_path, csv).map_err(|e| io_error("cannot write", &csv_path, e))?;
    let json_path = out.join("report.json");
    let mut json = File::create(&json_path).map_err(|e| io_error("cannot write", &json_path, e))?;
    writeln!(json, "{}", report.to_json()).map_err(|e| io_error("cannot write", &json_path, e))?;
    Ok(format!(
        "{} submissions, {} approvals, detected improvement {}\n",
        report.submissions, report.approvals, report.detected_improvement
    ))
}
