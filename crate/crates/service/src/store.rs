//! Durable experiment storage.
//!
//! Each experiment lives in `{data_dir}/experiments/{id}/` as an append-only
//! `events.jsonl` plus an occasional `snapshot.json`. Recovery loads the
//! snapshot and replays the events after it; a torn final line from a crash
//! mid-write is dropped.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use crate::config::{ExperimentConfig, ServiceConfig};
use crate::engine::{Event, Session, SessionSnapshot, Step};
use crate::error::ServiceError;

const EVENTS: &str = "events.jsonl";
const SNAPSHOT: &str = "snapshot.json";

pub struct EventLog {
    file: File,
}

impl EventLog {
    pub fn open(path: &Path) -> Result<Self, ServiceError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file })
    }

    pub fn append(&mut self, event: &Event) -> Result<(), ServiceError> {
        let mut line = serde_json::to_vec(event)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.flush()?;
        self.file.sync_data()?;
        Ok(())
    }

    /// Every complete event in the log, and the byte length they occupy.
    pub fn read(path: &Path) -> Result<(Vec<Event>, u64), ServiceError> {
        let mut reader = BufReader::new(File::open(path)?);
        let mut events = Vec::new();
        let mut good = 0u64;
        let mut line = String::new();
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            if !line.ends_with('\n') {
                break;
            }
            match serde_json::from_str(&line) {
                Ok(e) => events.push(e),
                Err(e) => {
                    let mut rest = String::new();
                    reader.read_line(&mut rest)?;
                    if rest.is_empty() {
                        break;
                    }
                    return Err(e.into());
                }
            }
            good += n as u64;
        }
        Ok((events, good))
    }
}

/// A live session with its log.
pub struct Experiment {
    session: Session,
    log: EventLog,
    dir: PathBuf,
    snapshot_every: u64,
    last_snapshot: u64,
}

impl Experiment {
    fn create(dir: PathBuf, created: Event, snapshot_every: u64) -> Result<Self, ServiceError> {
        let session = Session::from_created(&created)?;
        fs::create_dir_all(&dir)?;
        let mut log = EventLog::open(&dir.join(EVENTS))?;
        log.append(&created)?;
        Ok(Self {
            session,
            log,
            dir,
            snapshot_every,
            last_snapshot: 0,
        })
    }

    pub fn recover(dir: PathBuf, snapshot_every: u64) -> Result<Self, ServiceError> {
        let events_path = dir.join(EVENTS);
        let (events, good) = EventLog::read(&events_path)?;
        let file_len = fs::metadata(&events_path)?.len();
        if good < file_len {
            OpenOptions::new().write(true).open(&events_path)?.set_len(good)?;
        }
        let snapshot_path = dir.join(SNAPSHOT);
        let snapshot = match fs::read_to_string(&snapshot_path) {
            Ok(text) => serde_json::from_str::<SessionSnapshot>(&text)
                .ok()
                .filter(|s| s.state.events_applied as usize <= events.len()),
            Err(_) => None,
        };
        let (session, last_snapshot) = match snapshot {
            Some(snap) => {
                let mut session = Session::from_snapshot(snap)?;
                let done = session.events_applied();
                for e in &events[done as usize..] {
                    session.apply(e)?;
                }
                (session, done)
            }
            None => (Session::replay(&events)?, 0),
        };
        Ok(Self {
            session,
            log: EventLog::open(&events_path)?,
            dir,
            snapshot_every,
            last_snapshot,
        })
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    /// Persist the event, then apply it.
    pub fn commit(&mut self, event: &Event) -> Result<(), ServiceError> {
        self.log.append(event)?;
        self.session.apply(event)?;
        if self.snapshot_every > 0 && self.session.events_applied() - self.last_snapshot >= self.snapshot_every {
            self.snapshot()?;
        }
        Ok(())
    }

    pub fn run<T>(&mut self, step: Step<T>) -> Result<Option<T>, ServiceError> {
        match step {
            Step::Ready(v) => Ok(Some(v)),
            Step::Commit(e) => {
                self.commit(&e)?;
                Ok(None)
            }
        }
    }

    pub fn snapshot(&mut self) -> Result<(), ServiceError> {
        let tmp = self.dir.join("snapshot.json.tmp");
        let mut f = File::create(&tmp)?;
        serde_json::to_writer(&mut f, &self.session.snapshot())?;
        f.sync_all()?;
        fs::rename(&tmp, self.dir.join(SNAPSHOT))?;
        self.last_snapshot = self.session.events_applied();
        Ok(())
    }
}

pub type Handle = Arc<Mutex<Experiment>>;

/// Lock an experiment. A panic mid-command cannot leave a half-applied
/// event behind, so a poisoned lock is still usable.
pub fn lock(exp: &Mutex<Experiment>) -> MutexGuard<'_, Experiment> {
    exp.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

/// All experiments under one data directory.
pub struct Registry {
    root: PathBuf,
    snapshot_every: u64,
    experiments: RwLock<HashMap<String, Handle>>,
    idempotency: Mutex<HashMap<String, String>>,
}

impl Registry {
    pub fn open(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        let root = cfg.data_dir.join("experiments");
        fs::create_dir_all(&root)?;
        let mut experiments = HashMap::new();
        let mut idempotency = HashMap::new();
        let mut dirs: Vec<PathBuf> = fs::read_dir(&root)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(EVENTS).is_file())
            .collect();
        dirs.sort();
        for dir in dirs {
            let exp = Experiment::recover(dir, cfg.snapshot_every)?;
            let id = exp.session().id().to_owned();
            if let Some(key) = exp.session().idempotency_key() {
                idempotency.insert(key.to_owned(), id.clone());
            }
            experiments.insert(id, Arc::new(Mutex::new(exp)));
        }
        Ok(Self {
            root,
            snapshot_every: cfg.snapshot_every,
            experiments: RwLock::new(experiments),
            idempotency: Mutex::new(idempotency),
        })
    }

    /// Create an experiment; a repeated idempotency key returns the first id.
    /// The flag is true when a new experiment was created.
    pub fn create(&self, config: ExperimentConfig, idempotency_key: Option<String>) -> Result<(String, bool), ServiceError> {
        let mut keys = self.idempotency.lock().expect("idempotency lock");
        if let Some(id) = idempotency_key.as_ref().and_then(|k| keys.get(k)) {
            return Ok((id.clone(), false));
        }
        let id = uuid::Uuid::new_v4().simple().to_string();
        let created = Session::create_event(id.clone(), config, idempotency_key.clone())?;
        let exp = Experiment::create(self.root.join(&id), created, self.snapshot_every)?;
        self.experiments
            .write()
            .expect("registry lock")
            .insert(id.clone(), Arc::new(Mutex::new(exp)));
        if let Some(k) = idempotency_key {
            keys.insert(k, id.clone());
        }
        Ok((id, true))
    }

    pub fn get(&self, id: &str) -> Result<Handle, ServiceError> {
        self.experiments
            .read()
            .expect("registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("no experiment {id:?}")))
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.experiments.read().expect("registry lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Snapshot every experiment, for shutdown.
    pub fn flush(&self) -> Result<(), ServiceError> {
        for id in self.ids() {
            let handle = self.get(&id)?;
            lock(&handle).snapshot()?;
        }
        Ok(())
    }
}
