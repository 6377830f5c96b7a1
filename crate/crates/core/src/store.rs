//! Append-only result store.
//!
//! The file starts with the header line [`HEADER`]; every following
//! non-blank line is one JSON-encoded [`ResultRecord`]. Loading keeps the
//! strongest record per truth table, re-simulates every witness, and reports
//! lines that fail to parse or verify instead of dropping them silently.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aig::AigCircuit;
use crate::mutation::ClassOpt;
use crate::npn::ClassIndex;
use crate::synthesis::{OptResult, OptStatus};
use crate::truthtable::TruthTable;

/// First line of every store file.
pub const HEADER: &str = "# aigsense-store v1 json-lines";

/// Environment variable naming the default store path.
pub const STORE_ENV: &str = "AIGSENSE_STORE";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: missing or unsupported header {found:?}")]
    Header { path: PathBuf, found: String },
    #[error("line {line}: {msg}")]
    Corrupt { line: usize, msg: String },
    #[error("record for {tt_hex}: {msg}")]
    Verification { tt_hex: String, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub tt_hex: String,
    pub n: usize,
    pub size: usize,
    pub status: OptStatus,
    pub exhausted_below: Option<usize>,
    /// `;`-separated ASCII AIGER.
    pub witness_aag: String,
    pub backend: String,
    pub elapsed_ms: u64,
    pub timestamp: DateTime<Utc>,
}

impl ResultRecord {
    pub fn from_result(r: &OptResult, timestamp: DateTime<Utc>) -> Self {
        ResultRecord {
            tt_hex: r.tt.to_hex(),
            n: r.tt.n(),
            size: r.size,
            status: r.status,
            exhausted_below: r.exhausted_below,
            witness_aag: r.witness.to_aiger_compact(),
            backend: r.backend.clone(),
            elapsed_ms: r.elapsed.as_millis() as u64,
            timestamp,
        }
    }

    pub fn tt(&self) -> Result<TruthTable, StoreError> {
        TruthTable::parse_hex(&self.tt_hex, self.n).map_err(|e| self.fail(e.to_string()))
    }

    fn fail(&self, msg: String) -> StoreError {
        StoreError::Verification {
            tt_hex: self.tt_hex.clone(),
            msg,
        }
    }

    /// Parses and simulates the witness and checks the status fields.
    pub fn verify(&self) -> Result<AigCircuit, StoreError> {
        let tt = self.tt()?;
        let c = AigCircuit::from_aiger(&self.witness_aag).map_err(|e| self.fail(e.to_string()))?;
        if c.n() != self.n {
            return Err(self.fail(format!("witness has {} inputs", c.n())));
        }
        c.validate()
            .map_err(|v| self.fail(format!("invalid witness: {v:?}")))?;
        let got = c.evaluate().map_err(|e| self.fail(e.to_string()))?;
        if got != tt {
            return Err(self.fail(format!("witness computes {got}")));
        }
        if c.size() != self.size {
            return Err(self.fail(format!("witness has {} gates, size is {}", c.size(), self.size)));
        }
        let below = self.size.checked_sub(1);
        match self.status {
            OptStatus::Exact if self.exhausted_below != below => Err(self.fail(format!(
                "Exact size {} needs exhausted_below {:?}, found {:?}",
                self.size, below, self.exhausted_below
            ))),
            OptStatus::UpperBound if below.is_some() && self.exhausted_below >= below => {
                Err(self.fail("UpperBound with every smaller size excluded".into()))
            }
            _ => Ok(c),
        }
    }

    /// Rebuilds the in-memory result (verifying on the way).
    pub fn to_result(&self) -> Result<OptResult, StoreError> {
        let witness = self.verify()?;
        Ok(OptResult {
            tt: self.tt()?,
            size: self.size,
            status: self.status,
            witness,
            exhausted_below: self.exhausted_below,
            backend: self.backend.clone(),
            elapsed: Duration::from_millis(self.elapsed_ms),
        })
    }

    /// Strength order: `Less` means `self` is the better record.
    pub fn dominance(&self, other: &Self) -> Ordering {
        let rank = |s: OptStatus| match s {
            OptStatus::Exact => 0,
            OptStatus::UpperBound => 1,
        };
        rank(self.status)
            .cmp(&rank(other.status))
            .then(self.size.cmp(&other.size))
            .then(self.timestamp.cmp(&other.timestamp))
    }
}

/// A line that was skipped while loading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejected {
    pub line: usize,
    pub reason: String,
}

/// Best record per table plus every rejected line.
#[derive(Debug, Clone, Default)]
pub struct Loaded {
    pub records: BTreeMap<TruthTable, ResultRecord>,
    pub rejected: Vec<Rejected>,
}

impl Loaded {
    /// Best size claim per class of `index`, taken from any stored member
    /// of the class, plus the representatives of classes with no record.
    pub fn class_opts(&self, index: &ClassIndex) -> (BTreeMap<usize, ClassOpt>, Vec<TruthTable>) {
        let mut best: BTreeMap<usize, &ResultRecord> = BTreeMap::new();
        for (tt, rec) in &self.records {
            if tt.n() != index.n() {
                continue;
            }
            let class = index.class_of(*tt);
            match best.get(&class) {
                Some(old) if old.dominance(rec) != Ordering::Greater => {}
                _ => {
                    best.insert(class, rec);
                }
            }
        }
        let missing = index
            .classes()
            .iter()
            .filter(|c| !best.contains_key(&c.class_index))
            .map(|c| c.canon)
            .collect();
        let opts = best
            .into_iter()
            .map(|(c, r)| {
                (
                    c,
                    ClassOpt {
                        size: r.size,
                        status: r.status,
                    },
                )
            })
            .collect();
        (opts, missing)
    }

    fn offer(&mut self, tt: TruthTable, rec: ResultRecord) {
        match self.records.get(&tt) {
            Some(old) if old.dominance(&rec) != Ordering::Greater => {}
            _ => {
                self.records.insert(tt, rec);
            }
        }
    }
}

/// Handle on a store file; writes are appends of whole lines.
#[derive(Debug, Clone)]
pub struct Store {
    path: PathBuf,
}

impl Store {
    /// Opens `path`, writing the header if the file is new or empty.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)
            .map_err(io_err)?;
        let len = file.metadata().map_err(io_err)?.len();
        if len == 0 {
            writeln!(file, "{HEADER}").map_err(io_err)?;
        } else {
            let mut first = String::new();
            BufReader::new(File::open(&path).map_err(io_err)?)
                .read_line(&mut first)
                .map_err(io_err)?;
            if first.trim_end() != HEADER {
                return Err(StoreError::Header {
                    path,
                    found: first.trim_end().to_string(),
                });
            }
        }
        Ok(Store { path })
    }

    /// Store named by [`STORE_ENV`], falling back to `default`.
    pub fn from_env_or(default: impl AsRef<Path>) -> Result<Self, StoreError> {
        match std::env::var_os(STORE_ENV) {
            Some(p) if !p.is_empty() => Store::open(p),
            _ => Store::open(default),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Verifies and appends one record.
    pub fn append(&self, rec: &ResultRecord) -> Result<(), StoreError> {
        rec.verify()?;
        let line = serde_json::to_string(rec).expect("records serialize");
        let io_err = |source| StoreError::Io {
            path: self.path.clone(),
            source,
        };
        let mut file = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(io_err)?;
        file.write_all(format!("{line}\n").as_bytes()).map_err(io_err)?;
        file.flush().map_err(io_err)
    }

    pub fn load(&self) -> Result<Loaded, StoreError> {
        load(&self.path)
    }
}

/// Reads a store file; see the module docs.
pub fn load(path: impl AsRef<Path>) -> Result<Loaded, StoreError> {
    let path = path.as_ref();
    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut lines = reader.lines();
    let first = lines.next().transpose().map_err(io_err)?.unwrap_or_default();
    if first.trim_end() != HEADER {
        return Err(StoreError::Header {
            path: path.to_path_buf(),
            found: first,
        });
    }
    let mut out = Loaded::default();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line, lineno) {
            Ok((tt, rec)) => out.offer(tt, rec),
            Err(e) => out.rejected.push(Rejected {
                line: lineno,
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

fn parse_line(line: &str, lineno: usize) -> Result<(TruthTable, ResultRecord), StoreError> {
    let rec: ResultRecord = serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
        line: lineno,
        msg: e.to_string(),
    })?;
    rec.verify()?;
    Ok((rec.tt()?, rec))
}
