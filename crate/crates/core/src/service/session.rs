use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::info_state::{InformationState, PublicIS};
use crate::nl_frontend::render;
use crate::plan_engine::{Engine, EngineEvent, StepOutput};
use crate::speech_acts::{SpeechAct, Speaker};

use super::{Deployment, ServiceError};

/// One transcript entry; the snapshot is taken after the turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
    pub acts: Vec<SpeechAct>,
    pub snapshot: PublicIS,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub state: InformationState,
    pub transcript: Vec<TurnRecord>,
    /// Engine events per system turn, for diagnostics.
    #[serde(skip)]
    pub events: Vec<Vec<EngineEvent>>,
    pub created: u64,
    pub updated: u64,
}

/// Response to one user utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reply {
    pub system_turn: String,
    pub acts: Vec<SpeechAct>,
    pub public_snapshot: PublicIS,
    pub ended: bool,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl Session {
    /// A fresh session with its opening system turn recorded.
    pub fn open(id: impl Into<String>, dep: &Deployment) -> Result<Self, ServiceError> {
        let t = now();
        let mut s = Self {
            id: id.into(),
            state: InformationState::new(),
            transcript: Vec::new(),
            events: Vec::new(),
            created: t,
            updated: t,
        };
        s.system_turn(dep, &[])?;
        Ok(s)
    }

    fn system_turn(&mut self, dep: &Deployment, incoming: &[SpeechAct]) -> Result<Reply, ServiceError> {
        let engine = Engine::new(&dep.library, &dep.task, dep.engine.clone());
        let StepOutput { acts, events, .. } = engine.step(&mut self.state, incoming);
        let text = render(&acts, &dep.templates, &dep.task)?;
        self.events.push(events);
        self.push(Speaker::System, text.clone(), acts.clone());
        Ok(Reply {
            system_turn: text,
            acts,
            public_snapshot: self.state.snapshot(),
            ended: self.state.ended,
        })
    }

    fn push(&mut self, speaker: Speaker, text: String, acts: Vec<SpeechAct>) {
        self.transcript.push(TurnRecord {
            index: self.transcript.len(),
            speaker,
            text,
            acts,
            snapshot: self.state.snapshot(),
        });
        self.updated = now();
    }

    /// Tags `text`, runs the engine and records both turns.
    pub fn post(&mut self, dep: &Deployment, text: &str) -> Result<Reply, ServiceError> {
        if text.trim().is_empty() {
            return Err(ServiceError::EmptyText);
        }
        if self.state.ended {
            return Err(ServiceError::Ended(self.id.clone()));
        }
        let acts = dep.tagger.tag(text, &self.state.public, &dep.task.terminology);
        self.push(Speaker::User, text.to_string(), acts.clone());
        self.system_turn(dep, &acts)
    }
}

/// Concurrent sessions; posts to one session are serialized by its lock.
pub struct SessionManager {
    deployment: Arc<Deployment>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    data_dir: Option<PathBuf>,
    max_sessions: usize,
}

impl SessionManager {
    pub fn new(deployment: Arc<Deployment>, data_dir: Option<PathBuf>, max_sessions: usize) -> Self {
        Self {
            deployment,
            sessions: Mutex::new(HashMap::new()),
            data_dir,
            max_sessions,
        }
    }

    pub fn deployment(&self) -> &Deployment {
        &self.deployment
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        let map = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        map.get(id).cloned().ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    /// Appends records to the session's transcript file, one JSON object per line.
    fn persist(&self, id: &str, records: &[TurnRecord]) -> Result<(), ServiceError> {
        let Some(dir) = &self.data_dir else { return Ok(()) };
        let path = dir.join(format!("{id}.jsonl"));
        let io = |source| ServiceError::Io {
            path: path.clone(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut buf = String::new();
        for r in records {
            buf.push_str(&serde_json::to_string(r).expect("records serialize"));
            buf.push('\n');
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        f.write_all(buf.as_bytes()).map_err(io)
    }

    /// Opens a session and returns its id with the opening turn.
    pub fn create(&self) -> Result<(String, TurnRecord), ServiceError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session::open(id.clone(), &self.deployment)?;
        let first = session.transcript[0].clone();
        {
            let mut map = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
            if map.len() >= self.max_sessions {
                return Err(ServiceError::Capacity(self.max_sessions));
            }
            map.insert(id.clone(), Arc::new(Mutex::new(session)));
        }
        self.persist(&id, std::slice::from_ref(&first))?;
        Ok((id, first))
    }

    pub fn post(&self, id: &str, text: &str) -> Result<Reply, ServiceError> {
        let cell = self.get(id)?;
        let mut s = cell.lock().unwrap_or_else(|e| e.into_inner());
        let before = s.transcript.len();
        let reply = s.post(&self.deployment, text)?;
        self.persist(id, &s.transcript[before..])?;
        Ok(reply)
    }

    pub fn transcript(&self, id: &str) -> Result<Vec<TurnRecord>, ServiceError> {
        let cell = self.get(id)?;
        let s = cell.lock().unwrap_or_else(|e| e.into_inner());
        Ok(s.transcript.clone())
    }

    pub fn state(&self, id: &str) -> Result<PublicIS, ServiceError> {
        let cell = self.get(id)?;
        let s = cell.lock().unwrap_or_else(|e| e.into_inner());
        Ok(s.state.snapshot())
    }

    /// Drops the session from memory; its transcript file stays.
    pub fn end(&self, id: &str) -> Result<(), ServiceError> {
        let mut map = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        map.remove(id).map(|_| ()).ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
