//! On-disk layout, one directory per session:
//!
//! - `session.json`: the [`SessionMeta`], written once;
//! - `log.jsonl`: append-only answers, one JSON line each, synced per answer;
//! - `assignments.json`: which annotator holds which query;
//! - `labels.json`: block labels, once finalized.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use acluster_core::{Answer, Query, QueryLog};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{ServiceError, ServiceResult};
use crate::session::SessionMeta;

const META: &str = "session.json";
const LOG: &str = "log.jsonl";
const ASSIGNMENTS: &str = "assignments.json";
const LABELS: &str = "labels.json";

/// Everything persisted for one session.
#[derive(Debug, Clone)]
pub struct Stored {
    pub meta: SessionMeta,
    pub log: Vec<Answer>,
    pub assignments: BTreeMap<String, Query>,
    pub labels: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

/// Session ids double as directory names, so they are restricted.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> ServiceResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> ServiceResult<PathBuf> {
        if !valid_id(id) {
            return Err(ServiceError::NotFound(format!("no session `{id}`")));
        }
        Ok(self.root.join(id))
    }

    pub fn exists(&self, id: &str) -> bool {
        self.dir(id).map(|d| d.join(META).is_file()).unwrap_or(false)
    }

    pub fn create(&self, meta: &SessionMeta) -> ServiceResult<()> {
        let dir = self.dir(&meta.id)?;
        fs::create_dir(&dir)?;
        File::create(dir.join(LOG))?.sync_all()?;
        write_json(&dir.join(META), meta)?;
        sync_dir(&dir)?;
        sync_dir(&self.root)
    }

    /// Appends answers to the log and syncs it before returning.
    pub fn append(&self, id: &str, answers: &[Answer]) -> ServiceResult<()> {
        if answers.is_empty() {
            return Ok(());
        }
        let mut buf = String::new();
        for a in answers {
            buf.push_str(&QueryLog::encode_line(a));
            buf.push('\n');
        }
        let mut f = OpenOptions::new().append(true).open(self.dir(id)?.join(LOG))?;
        f.write_all(buf.as_bytes())?;
        f.sync_data()?;
        Ok(())
    }

    pub fn write_assignments(&self, id: &str, a: &BTreeMap<String, Query>) -> ServiceResult<()> {
        write_json(&self.dir(id)?.join(ASSIGNMENTS), a)
    }

    pub fn write_labels(&self, id: &str, labels: &BTreeMap<String, String>) -> ServiceResult<()> {
        write_json(&self.dir(id)?.join(LABELS), labels)
    }

    /// Reads a session back. A trailing line without its newline was never
    /// acknowledged and is cut off.
    pub fn load(&self, id: &str) -> ServiceResult<Option<Stored>> {
        let dir = self.dir(id)?;
        if !dir.join(META).is_file() {
            return Ok(None);
        }
        let meta: SessionMeta = read_json(&dir.join(META))?;
        let log_path = dir.join(LOG);
        let mut text = fs::read_to_string(&log_path)?;
        if !text.is_empty() && !text.ends_with('\n') {
            let keep = text.rfind('\n').map_or(0, |i| i + 1);
            log::warn!("session {id}: dropping a torn log line");
            text.truncate(keep);
            let f = OpenOptions::new().write(true).open(&log_path)?;
            f.set_len(keep as u64)?;
            f.sync_all()?;
        }
        let log = QueryLog::read_jsonl(meta.items.len(), BufReader::new(text.as_bytes()))
            .map_err(|e| ServiceError::Storage(format!("session {id}: {e}")))?;
        let assignments = if dir.join(ASSIGNMENTS).is_file() {
            read_json(&dir.join(ASSIGNMENTS))?
        } else {
            BTreeMap::new()
        };
        let labels = if dir.join(LABELS).is_file() {
            Some(read_json(&dir.join(LABELS))?)
        } else {
            None
        };
        Ok(Some(Stored {
            meta,
            log: log.answers().to_vec(),
            assignments,
            labels,
        }))
    }
}

/// Writes through a temporary file and a rename so readers never see a
/// partial document.
fn write_json<T: Serialize>(path: &Path, value: &T) -> ServiceResult<()> {
    let tmp = path.with_extension("tmp");
    let body = serde_json::to_vec_pretty(value).map_err(|e| ServiceError::Internal(e.to_string()))?;
    let mut f = File::create(&tmp)?;
    f.write_all(&body)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> ServiceResult<T> {
    let text = fs::read(path)?;
    serde_json::from_slice(&text).map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))
}

fn sync_dir(dir: &Path) -> ServiceResult<()> {
    File::open(dir)?.sync_all()?;
    Ok(())
}
