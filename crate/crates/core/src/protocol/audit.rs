use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::SessionConfig;
use super::SessionError;
use crate::graph::ApprovalHistory;
use crate::policy::Policy;

pub const AUDIT_FORMAT: u32 = 1;

/// First line of every audit log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditHeader {
    pub format: u32,
    pub config: SessionConfig,
    pub labels_digest: String,
    pub baseline_digest: String,
    pub created_ms: u64,
}

/// One decided submission. Everything except `t`, `decision` and `delta` is
/// internal and never shown to the developer in blinded mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApprovalRecord {
    pub t: usize,
    pub history: ApprovalHistory,
    pub policy: Policy,
    pub node_weight: f64,
    pub threshold: f64,
    pub p_value: f64,
    pub decision: bool,
    pub tau: usize,
    pub delta: f64,
    pub digest: String,
    pub timestamp_ms: u64,
    pub scores: Vec<f64>,
    #[serde(default)]
    pub diagnostics: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AuditEntry {
    Header(AuditHeader),
    Step(ApprovalRecord),
}

/// SHA-256 of the little-endian bytes of the scores, hex encoded.
pub fn scores_digest(scores: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for s in scores {
        hasher.update(s.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

pub fn labels_digest(labels: &[bool]) -> String {
    let bytes: Vec<u8> = labels.iter().map(|&y| y as u8).collect();
    hex::encode(Sha256::digest(&bytes))
}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Append-only JSON-lines writer.
#[derive(Debug)]
pub struct AuditWriter {
    out: BufWriter<File>,
}

impl AuditWriter {
    /// Creates a new log; fails if the file already exists.
    pub fn create(path: &Path, header: &AuditHeader) -> Result<Self, SessionError> {
        let file = OpenOptions::new().write(true).create_new(true).open(path)?;
        let mut w = Self {
            out: BufWriter::new(file),
        };
        w.append(&AuditEntry::Header(header.clone()))?;
        Ok(w)
    }

    pub fn open_append(path: &Path) -> Result<Self, SessionError> {
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(Self {
            out: BufWriter::new(file),
        })
    }

    pub fn append(&mut self, entry: &AuditEntry) -> Result<(), SessionError> {
        serde_json::to_writer(&mut self.out, entry)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

/// Reads and checks the structure of a log: one header, then steps numbered 1, 2, ...
pub fn read_audit_log(path: &Path) -> Result<(AuditHeader, Vec<ApprovalRecord>), SessionError> {
    let file = File::open(path)?;
    let mut lines = Vec::new();
    let mut reader = BufReader::new(file);
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        if !line.ends_with('\n') {
            return Err(SessionError::CorruptLog(format!(
                "line {} is truncated",
                lines.len() + 1
            )));
        }
        lines.push(line);
    }
    let mut entries = lines.iter().enumerate().map(|(i, line)| {
        serde_json::from_str::<AuditEntry>(line)
            .map_err(|e| SessionError::CorruptLog(format!("line {}: {e}", i + 1)))
    });
    let header = match entries.next() {
        None => return Err(SessionError::CorruptLog("log is empty".into())),
        Some(entry) => match entry? {
            AuditEntry::Header(h) => h,
            AuditEntry::Step(_) => return Err(SessionError::CorruptLog("first line is not a header".into())),
        },
    };
    if header.format != AUDIT_FORMAT {
        return Err(SessionError::CorruptLog(format!("unsupported log format {}", header.format)));
    }
    let mut steps = Vec::new();
    for entry in entries {
        match entry? {
            AuditEntry::Header(_) => return Err(SessionError::CorruptLog("repeated header".into())),
            AuditEntry::Step(r) => {
                if r.t != steps.len() + 1 {
                    return Err(SessionError::CorruptLog(format!(
                        "expected step {}, found step {}",
                        steps.len() + 1,
                        r.t
                    )));
                }
                steps.push(r);
            }
        }
    }
    Ok((header, steps))
}
