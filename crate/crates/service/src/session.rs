//! Feedback sessions and their append-only logs.
//!
//! Every mutating call is validated against the in-memory state, written to
//! `<dir>/<session-id>.jsonl` as one request record, and only then applied.
//! On startup the logs are replayed through the same code path, so a
//! restarted server rebuilds exactly the state it had.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use pertinex_core::{
    score_query, Collection, ExpandedQuery, ExpansionStrategy, FeedbackMethod, Index,
    PertinenceFeedback, ScoredList, ScoredObject,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const LOG_EXTENSION: &str = "jsonl";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("query has no goals")]
    EmptyQuery,
    #[error("no object ids given")]
    NoObjects,
    #[error("object {0} was never returned in this session")]
    UnseenObject(String),
    #[error("mark at least one object first")]
    NothingJudged,
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session log {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("session log {path}, line {line}: {message}")]
    CorruptLog {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// One mutating request, as stored in the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum LogRecord {
    Create { goals: Vec<String> },
    Feedback { object_ids: Vec<String> },
    Expand { method: FeedbackMethod, k: usize },
}

/// Goal added by an expansion, without the method tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddedGoal {
    pub goal: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Session {
    pub session_id: String,
    pub goals: Vec<String>,
    /// Pertinent objects in the order they were first marked.
    pub judged: Vec<String>,
    /// Every object id ever returned to this session.
    pub seen: BTreeSet<String>,
    pub method: Option<FeedbackMethod>,
    pub expanded: Option<ExpandedQuery>,
    pub results: ScoredList,
    pub iteration: u64,
}

impl Session {
    fn create(id: String, goals: Vec<String>, index: &Index) -> Result<Self, SessionError> {
        if goals.is_empty() {
            return Err(SessionError::EmptyQuery);
        }
        let results = score_query(index, &goals);
        Ok(Self {
            session_id: id,
            seen: results.ids().map(str::to_string).collect(),
            goals,
            judged: Vec::new(),
            method: None,
            expanded: None,
            results,
            iteration: 0,
        })
    }

    fn check_feedback(&self, object_ids: &[String]) -> Result<(), SessionError> {
        if object_ids.is_empty() {
            return Err(SessionError::NoObjects);
        }
        match object_ids.iter().find(|o| !self.seen.contains(*o)) {
            Some(unseen) => Err(SessionError::UnseenObject(unseen.clone())),
            None => Ok(()),
        }
    }

    fn apply_feedback(&mut self, object_ids: &[String]) {
        for o in object_ids {
            if !self.judged.contains(o) {
                self.judged.push(o.clone());
            }
        }
    }

    fn check_expand(&self) -> Result<(), SessionError> {
        if self.judged.is_empty() {
            Err(SessionError::NothingJudged)
        } else {
            Ok(())
        }
    }

    fn apply_expand(&mut self, method: FeedbackMethod, k: usize, index: &Index) {
        let fb = PertinenceFeedback::new(index, self.judged.iter().cloned(), method)
            .expect("judged objects were returned by this index");
        let expanded = fb.expand_query(&self.goals, ExpansionStrategy::TopK(k));
        let judged: BTreeSet<String> = self.judged.iter().cloned().collect();
        self.results = fb.score(&expanded).without(&judged);
        self.seen.extend(self.results.ids().map(str::to_string));
        self.method = Some(method);
        self.expanded = Some(expanded);
        self.iteration += 1;
    }

    pub fn added_goals(&self) -> Vec<AddedGoal> {
        self.expanded
            .iter()
            .flat_map(|eq| &eq.added)
            .map(|w| AddedGoal {
                goal: w.goal.clone(),
                weight: w.weight,
            })
            .collect()
    }

    pub fn results(&self) -> &[ScoredObject] {
        self.results.entries()
    }
}

/// All sessions over one collection, optionally persisted to a directory.
#[derive(Debug)]
pub struct SessionManager {
    index: Index,
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl SessionManager {
    /// Sessions kept in memory only.
    pub fn in_memory(collection: &Collection) -> Self {
        Self {
            index: Index::build(collection),
            dir: None,
            sessions: RwLock::default(),
        }
    }

    /// Opens (creating if needed) a session directory and replays its logs.
    pub fn open(collection: &Collection, dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| SessionError::Io {
            path: dir.clone(),
            source,
        })?;
        let manager = Self {
            index: Index::build(collection),
            dir: Some(dir.clone()),
            sessions: RwLock::default(),
        };
        let entries = fs::read_dir(&dir).map_err(|source| SessionError::Io {
            path: dir.clone(),
            source,
        })?;
        let mut logs: Vec<PathBuf> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == LOG_EXTENSION))
            .collect();
        logs.sort();
        let mut sessions = HashMap::new();
        for path in logs {
            if let Some(session) = manager.replay(&path)? {
                sessions.insert(session.session_id.clone(), Arc::new(Mutex::new(session)));
            }
        }
        tracing::info!(count = sessions.len(), dir = %dir.display(), "restored sessions");
        *manager.sessions.write().expect("session map poisoned") = sessions;
        Ok(manager)
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn create(&self, goals: Vec<String>) -> Result<Session, SessionError> {
        let id = format!("{:032x}", rand::random::<u128>());
        let session = Session::create(id.clone(), goals.clone(), &self.index)?;
        self.append(&id, &LogRecord::Create { goals })?;
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(id, Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Result<Session, SessionError> {
        let handle = self.handle(id)?;
        let session = handle.lock().expect("session poisoned");
        Ok(session.clone())
    }

    pub fn mark_pertinent(
        &self,
        id: &str,
        object_ids: Vec<String>,
    ) -> Result<Session, SessionError> {
        let handle = self.handle(id)?;
        let mut session = handle.lock().expect("session poisoned");
        session.check_feedback(&object_ids)?;
        self.append(
            id,
            &LogRecord::Feedback {
                object_ids: object_ids.clone(),
            },
        )?;
        session.apply_feedback(&object_ids);
        Ok(session.clone())
    }

    pub fn expand(
        &self,
        id: &str,
        method: FeedbackMethod,
        k: usize,
    ) -> Result<Session, SessionError> {
        let handle = self.handle(id)?;
        let mut session = handle.lock().expect("session poisoned");
        session.check_expand()?;
        self.append(id, &LogRecord::Expand { method, k })?;
        session.apply_expand(method, k, &self.index);
        Ok(session.clone())
    }

    fn handle(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()))
    }

    fn log_path(&self, id: &str) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("{id}.{LOG_EXTENSION}")))
    }

    fn append(&self, id: &str, record: &LogRecord) -> Result<(), SessionError> {
        let Some(path) = self.log_path(id) else {
            return Ok(());
        };
        let mut line = serde_json::to_string(record).expect("log records serialize");
        line.push('\n');
        let io_err = |source| SessionError::Io {
            path: path.clone(),
            source,
        };
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err)?;
        file.write_all(line.as_bytes()).map_err(io_err)?;
        file.sync_data().map_err(io_err)
    }

    /// Rebuilds one session from its log. A torn final line (a write cut
    /// short by a crash) is dropped; anything else malformed is an error.
    fn replay(&self, path: &Path) -> Result<Option<Session>, SessionError> {
        let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
            return Ok(None);
        };
        let file = File::open(path).map_err(|source| SessionError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let lines: Vec<String> = BufReader::new(file)
            .lines()
            .collect::<Result<_, _>>()
            .map_err(|source| SessionError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        let corrupt = |line: usize, message: String| SessionError::CorruptLog {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut session: Option<Session> = None;
        let last = lines.len();
        for (i, text) in lines.iter().enumerate() {
            let line = i + 1;
            if text.trim().is_empty() {
                continue;
            }
            let record: LogRecord = match serde_json::from_str(text) {
                Ok(r) => r,
                Err(e) if line == last => {
                    tracing::warn!(path = %path.display(), error = %e, "dropping torn log line");
                    break;
                }
                Err(e) => return Err(corrupt(line, e.to_string())),
            };
            match (record, session.as_mut()) {
                (LogRecord::Create { goals }, None) => {
                    session = Some(
                        Session::create(id.to_string(), goals, &self.index)
                            .map_err(|e| corrupt(line, e.to_string()))?,
                    );
                }
                (LogRecord::Feedback { object_ids }, Some(s)) => {
                    s.check_feedback(&object_ids)
                        .map_err(|e| corrupt(line, e.to_string()))?;
                    s.apply_feedback(&object_ids);
                }
                (LogRecord::Expand { method, k }, Some(s)) => {
                    s.check_expand().map_err(|e| corrupt(line, e.to_string()))?;
                    s.apply_expand(method, k, &self.index);
                }
                (LogRecord::Create { .. }, Some(_)) => {
                    return Err(corrupt(line, "second create record".into()))
                }
                (_, None) => return Err(corrupt(line, "record before create".into())),
            }
        }
        Ok(session)
    }
}
