//! Live sessions, each behind its own lock, mirrored to a directory of
//! session files.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use sketchdoc::docstore::Session;
use sketchdoc::{PipelineError, PreparedChart};
use thiserror::Error;
use tokio::sync::Mutex;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session directory: {0}")]
    Io(#[from] io::Error),
    #[error("session file {file}: {source}")]
    BadFile { file: PathBuf, source: PipelineError },
}

/// One session and its chart. The chart never changes after creation, so
/// it is read without taking the lock.
pub struct SessionEntry {
    pub chart: PreparedChart,
    pub session: Mutex<Session>,
}

pub struct SessionStore {
    dir: Option<PathBuf>,
    entries: RwLock<BTreeMap<String, Arc<SessionEntry>>>,
    next_id: AtomicU64,
}

const ID_PREFIX: &str = "session-";

fn id_number(id: &str) -> Option<u64> {
    id.strip_prefix(ID_PREFIX)?.parse().ok()
}

impl SessionStore {
    pub fn in_memory() -> SessionStore {
        SessionStore {
            dir: None,
            entries: RwLock::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    /// Opens a session directory, creating it if needed, and loads every
    /// session file in it.
    pub fn open(dir: impl Into<PathBuf>) -> Result<SessionStore, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut entries = BTreeMap::new();
        let mut next = 1;
        for item in fs::read_dir(&dir)? {
            let path = item?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = fs::read_to_string(&path)?;
            let bad = |source: PipelineError| StoreError::BadFile {
                file: path.clone(),
                source,
            };
            let session = Session::from_json(&text).map_err(|e| bad(e.into()))?;
            let chart = PreparedChart::from_session(&session).map_err(bad)?;
            if let Some(n) = id_number(&session.id) {
                next = next.max(n + 1);
            }
            entries.insert(
                session.id.clone(),
                Arc::new(SessionEntry {
                    chart,
                    session: Mutex::new(session),
                }),
            );
        }
        log::info!("loaded {} sessions from {}", entries.len(), dir.display());
        Ok(SessionStore {
            dir: Some(dir),
            entries: RwLock::new(entries),
            next_id: AtomicU64::new(next),
        })
    }

    pub fn create(&self, chart: PreparedChart) -> Result<(String, Arc<SessionEntry>), StoreError> {
        let id = format!("{ID_PREFIX}{}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let session = chart.new_session(id.clone());
        self.persist(&session)?;
        let entry = Arc::new(SessionEntry {
            chart,
            session: Mutex::new(session),
        });
        self.entries
            .write()
            .expect("store lock")
            .insert(id.clone(), entry.clone());
        Ok((id, entry))
    }

    pub fn get(&self, id: &str) -> Option<Arc<SessionEntry>> {
        self.entries.read().expect("store lock").get(id).cloned()
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.read().expect("store lock").keys().cloned().collect()
    }

    pub fn file_path(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{id}.json")))
    }

    /// Writes the session file, if the store has a directory.
    pub fn persist(&self, session: &Session) -> Result<(), StoreError> {
        if let Some(path) = self.file_path(&session.id) {
            write_atomically(&path, &session.to_json())?;
        }
        Ok(())
    }
}

fn write_atomically(path: &Path, text: &str) -> io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)
}
