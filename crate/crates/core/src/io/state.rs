//! Persisted test state.
//!
//! The file is one pretty-printed JSON document:
//!
//! ```json
//! { "format": "adastop-state", "version": 1, "checksum": "sha256:…", "state": { … } }
//! ```
//!
//! The checksum covers the compact serialization of `state`. Permutation
//! pools are not stored; loading replays the recorded batches with the
//! stored seed and checks that every decision and boundary comes out the
//! same.

use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::BoundaryLedger;
use crate::engine::{AdaStop, InterimDecisionReport, TestConfig};
use crate::error::{Error, Result};
use crate::graph::{Comparison, Status};
use crate::perm::PoolMode;
use crate::store::EvaluationStore;

pub const STATE_FORMAT: &str = "adastop-state";
pub const STATE_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestState {
    pub config: TestConfig,
    pub interim: usize,
    pub comparisons: Vec<Comparison>,
    pub store: EvaluationStore,
    pub statuses: Vec<Status>,
    pub ledger: BoundaryLedger,
    pub reports: Vec<InterimDecisionReport>,
    /// Not needed to rebuild the pool; kept for inspection.
    pub pool_mode: PoolMode,
    pub stopped: bool,
}

#[derive(Serialize, Deserialize)]
struct Envelope<S> {
    format: String,
    version: u64,
    checksum: String,
    state: S,
}

fn checksum(state: &TestState) -> Result<String> {
    let compact = serde_json::to_vec(state)?;
    Ok(format!("sha256:{}", hex::encode(Sha256::digest(&compact))))
}

impl AdaStop {
    pub fn to_state(&self) -> TestState {
        TestState {
            config: self.config().clone(),
            interim: self.interim(),
            comparisons: self.graph().comparisons().to_vec(),
            store: self.store().clone(),
            statuses: self.graph().statuses().to_vec(),
            ledger: self.ledger().clone(),
            reports: self.reports().to_vec(),
            pool_mode: self.pool().mode(),
            stopped: self.is_stopped(),
        }
    }

    /// Rebuilds a test by replaying the stored batches.
    pub fn from_state(state: &TestState) -> Result<Self> {
        let mut test = AdaStop::with_comparisons(
            state.config.clone(),
            state.store.agents().to_vec(),
            state.comparisons.clone(),
        )?;
        if state.store.group_size() != state.config.group_size || state.store.max_interims() != state.config.interims {
            return Err(Error::Inconsistent("store dimensions differ from the configuration".into()));
        }
        if state.interim != state.store.interim() {
            return Err(Error::Inconsistent(format!(
                "interim counter {} but {} batches stored",
                state.interim,
                state.store.interim()
            )));
        }
        for (i, batch) in state.store.batches().iter().enumerate() {
            if test.is_stopped() {
                return Err(Error::Inconsistent(format!("batch {} recorded after the test stopped", i + 1)));
            }
            test.interim_step(batch.clone())?;
        }
        let check = |what: &str, same: bool| {
            if same {
                Ok(())
            } else {
                Err(Error::Inconsistent(format!("replayed {what} differ from the stored ones")))
            }
        };
        check("statuses", test.graph().statuses() == state.statuses.as_slice())?;
        check("boundaries", *test.ledger() == state.ledger)?;
        check("reports", test.reports() == state.reports.as_slice())?;
        check("pool modes", test.pool().mode() == state.pool_mode)?;
        check("stop flags", test.is_stopped() == state.stopped)?;
        Ok(test)
    }
}

/// Serializes `state` into the file format.
pub fn encode_state(state: &TestState) -> Result<String> {
    let envelope = Envelope {
        format: STATE_FORMAT.to_string(),
        version: STATE_VERSION,
        checksum: checksum(state)?,
        state,
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    Ok(text)
}

pub fn decode_state(text: &str) -> Result<TestState> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::CorruptState(format!("not a JSON document: {e}")))?;
    let field = |name: &str| {
        value
            .get(name)
            .ok_or_else(|| Error::CorruptState(format!("missing `{name}`")))
    };
    if field("format")?.as_str() != Some(STATE_FORMAT) {
        return Err(Error::CorruptState(format!("not an {STATE_FORMAT} file")));
    }
    let version = field("version")?
        .as_u64()
        .ok_or_else(|| Error::CorruptState("`version` is not an integer".into()))?;
    if version != STATE_VERSION {
        return Err(Error::Version {
            found: version,
            supported: STATE_VERSION,
        });
    }
    let envelope: Envelope<TestState> =
        serde_json::from_value(value).map_err(|e| Error::CorruptState(e.to_string()))?;
    let found = checksum(&envelope.state)?;
    if found != envelope.checksum {
        return Err(Error::Integrity {
            expected: envelope.checksum,
            found,
        });
    }
    Ok(envelope.state)
}

/// Writes through a temporary file and a rename so that a crash never
/// leaves a truncated state behind.
pub fn save_state(path: &Path, state: &TestState) -> Result<()> {
    let text = encode_state(state)?;
    let tmp = sibling(path, ".tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_state(path: &Path) -> Result<TestState> {
    decode_state(&fs::read_to_string(path)?)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

/// Exclusive lock on a state file, held as `<state>.lock` until dropped.
#[derive(Debug)]
pub struct StateLock {
    path: PathBuf,
}

impl StateLock {
    pub fn acquire(state: &Path) -> Result<Self> {
        let path = sibling(state, ".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self { path })
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(Error::Locked(state.to_path_buf())),
            Err(e) => Err(e.into()),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Drop for StateLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
