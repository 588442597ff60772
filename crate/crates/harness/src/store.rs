//! Append-only line-oriented trial store. One JSON record per line, either
//! a completed trial or an attempt log for a trial that produced no record.
//! Appends are serialized through a single writer and synced before they
//! are acknowledged; prior lines are never rewritten, which is what makes
//! interrupted sweeps resumable by construction.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use chsh_core::model::{TrialRecord, WordOrder};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage error at {path}: {source}")]
    Storage {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Log line for a trial attempt that produced no record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub trial_id: String,
    pub model_id: String,
    pub cell_key: String,
    pub error: String,
    pub timestamp_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoreRecord {
    Trial(Box<TrialRecord>),
    Attempt(AttemptLog),
}

#[derive(Debug)]
pub struct TrialStore {
    path: PathBuf,
    writer: Mutex<File>,
}

impl TrialStore {
    /// Opens (creating if absent) the store file for appending.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| StoreError::Storage {
                path: path.clone(),
                source,
            })?;
        Ok(Self {
            path,
            writer: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record as a single line, synced to disk before this
    /// returns. Concurrent appends serialize on the writer lock.
    pub fn append(&self, record: &StoreRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(record).expect("records always serialize");
        line.push('\n');
        let mut writer = self.writer.lock().expect("store writer");
        writer
            .write_all(line.as_bytes())
            .and_then(|()| writer.flush())
            .and_then(|()| writer.sync_data())
            .map_err(|source| StoreError::Storage {
                path: self.path.clone(),
                source,
            })
    }

    pub fn append_trial(&self, trial: &TrialRecord) -> Result<(), StoreError> {
        self.append(&StoreRecord::Trial(Box::new(trial.clone())))
    }

    pub fn append_attempt(&self, attempt: &AttemptLog) -> Result<(), StoreError> {
        self.append(&StoreRecord::Attempt(attempt.clone()))
    }
}

/// How to treat corrupt lines on load.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseMode {
    /// Fail naming the offending line.
    Strict,
    /// Skip corrupt lines, counting them.
    Lenient,
}

/// Record predicates applied while loading.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialFilter {
    pub model_id: Option<String>,
    pub pair_key: Option<String>,
    pub order: Option<WordOrder>,
    pub sampling_key: Option<String>,
}

impl TrialFilter {
    pub fn matches(&self, trial: &TrialRecord) -> bool {
        self.model_id.as_deref().is_none_or(|m| m == trial.model_id)
            && self
                .pair_key
                .as_deref()
                .is_none_or(|p| p == trial.pair.key())
            && self.order.is_none_or(|o| o == trial.order)
            && self
                .sampling_key
                .as_deref()
                .is_none_or(|s| s == trial.sampling.key())
    }
}

/// Everything a load produced, in append order.
#[derive(Debug, Default)]
pub struct LoadedStore {
    pub trials: Vec<TrialRecord>,
    pub attempts: Vec<AttemptLog>,
    pub skipped_lines: usize,
}

/// Reads the store, applying the filter to trial records. Attempt logs are
/// returned unfiltered.
pub fn load_store(
    path: impl AsRef<Path>,
    mode: ParseMode,
    filter: &TrialFilter,
) -> Result<LoadedStore, StoreError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| StoreError::Storage {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut loaded = LoadedStore::default();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| StoreError::Storage {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<StoreRecord>(&line) {
            Ok(StoreRecord::Trial(trial)) => {
                if filter.matches(&trial) {
                    loaded.trials.push(*trial);
                }
            }
            Ok(StoreRecord::Attempt(attempt)) => loaded.attempts.push(attempt),
            Err(source) => match mode {
                ParseMode::Strict => {
                    return Err(StoreError::Parse {
                        line: index + 1,
                        source,
                    })
                }
                ParseMode::Lenient => loaded.skipped_lines += 1,
            },
        }
    }
    Ok(loaded)
}
