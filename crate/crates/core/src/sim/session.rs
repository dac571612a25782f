//! Interactive simulation sessions.
//!
//! Each session runs on its own thread and owns its state. Callers talk to
//! it through a message channel and read the latest published snapshot;
//! snapshots are replaced whole, so readers never see a partial update.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Actuation, SimConfig, SimError, SimState, Simulator, SteadyDetector, Trajectory};
use crate::design::DesignSpec;
use crate::mapping::{
    mix, ChannelMapping, JoystickInput, MappingCommand, MixError, Plant, RemapError, RemapSession,
    Stage, Verdicts,
};

pub type SessionId = u64;

/// Wall-clock tick period of real-time sessions.
pub const TICK: Duration = Duration::from_millis(20);

/// Samples kept for trajectory export: ten minutes at the real-time tick.
pub const HISTORY_LIMIT: usize = 30_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pacing {
    /// Advance one step per [`TICK`] of wall time.
    RealTime,
    /// Advance only on explicit [`SessionManager::step`] calls.
    Stepped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub id: SessionId,
    pub design_name: String,
    pub state: SimState,
    pub input: JoystickInput,
    pub command: Option<String>,
    pub mapping: Option<ChannelMapping>,
    pub stage: Stage,
    pub verdicts: Option<Verdicts>,
    pub steady: bool,
    /// Set when the integration failed; the session stops advancing.
    pub fault: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error(transparent)]
    Input(#[from] MixError),
    #[error(transparent)]
    Remap(#[from] RemapError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("session {0} has stopped")]
    Closed(SessionId),
}

enum Message {
    Input(JoystickInput),
    Remap(MappingCommand, Sender<Result<Verdicts, RemapError>>),
    Step(usize, Sender<()>),
    Stop,
}

type History = Arc<Mutex<VecDeque<SimState>>>;

struct Handle {
    tx: Sender<Message>,
    snapshot: Arc<RwLock<SessionSnapshot>>,
    history: History,
    config: SimConfig,
    thread: Option<JoinHandle<()>>,
}

impl Drop for Handle {
    fn drop(&mut self) {
        let _ = self.tx.send(Message::Stop);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Owns all live sessions.
pub struct SessionManager {
    sessions: Mutex<HashMap<SessionId, Handle>>,
    next_id: AtomicU64,
    pacing: Pacing,
}

impl SessionManager {
    pub fn new(pacing: Pacing) -> Self {
        Self { sessions: Mutex::new(HashMap::new()), next_id: AtomicU64::new(1), pacing }
    }

    pub fn pacing(&self) -> Pacing {
        self.pacing
    }

    /// Starts a session at rest with no mapping confirmed.
    pub fn create(&self, design: DesignSpec, plant: Plant, config: SimConfig) -> Result<SessionId, SessionError> {
        // Fail early on bad config or envelope rather than inside the thread.
        Simulator::new(&design, config)?;
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let snapshot = Arc::new(RwLock::new(SessionSnapshot {
            id,
            design_name: design.name.clone(),
            state: SimState::default(),
            input: JoystickInput::default(),
            command: None,
            mapping: None,
            stage: Stage::Init,
            verdicts: None,
            steady: false,
            fault: None,
        }));
        let history: History = Arc::new(Mutex::new(VecDeque::from([SimState::default()])));
        let (tx, rx) = mpsc::channel();
        let worker = Worker {
            history: Arc::clone(&history),
            remap: RemapSession::new(plant),
            design,
            config,
            snapshot: Arc::clone(&snapshot),
            input: JoystickInput::default(),
            mapping: None,
            state: SimState::default(),
            detector: SteadyDetector::new(&config),
            fault: None,
        };
        let pacing = self.pacing;
        let thread = std::thread::Builder::new()
            .name(format!("blimp-session-{id}"))
            .spawn(move || worker.run(rx, pacing))
            .expect("spawn session thread");
        self.lock().insert(id, Handle { tx, snapshot, history, config, thread: Some(thread) });
        Ok(id)
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<SessionId, Handle>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn sender(&self, id: SessionId) -> Result<Sender<Message>, SessionError> {
        self.lock().get(&id).map(|h| h.tx.clone()).ok_or(SessionError::UnknownSession(id))
    }

    pub fn ids(&self) -> Vec<SessionId> {
        let mut ids: Vec<_> = self.lock().keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    pub fn input(&self, id: SessionId, input: JoystickInput) -> Result<(), SessionError> {
        input.validate()?;
        self.sender(id)?
            .send(Message::Input(input))
            .map_err(|_| SessionError::Closed(id))
    }

    pub fn state(&self, id: SessionId) -> Result<SessionSnapshot, SessionError> {
        let sessions = self.lock();
        let handle = sessions.get(&id).ok_or(SessionError::UnknownSession(id))?;
        let snap = handle.snapshot.read().unwrap_or_else(|e| e.into_inner()).clone();
        Ok(snap)
    }

    /// Recent samples, oldest first; at most [`HISTORY_LIMIT`] of them.
    pub fn trajectory(&self, id: SessionId) -> Result<Trajectory, SessionError> {
        let (history, config) = {
            let sessions = self.lock();
            let handle = sessions.get(&id).ok_or(SessionError::UnknownSession(id))?;
            (Arc::clone(&handle.history), handle.config)
        };
        let samples: Vec<SimState> = history.lock().unwrap_or_else(|e| e.into_inner()).iter().copied().collect();
        let mut detector = SteadyDetector::new(&config);
        for s in &samples {
            detector.push(s);
        }
        Ok(Trajectory { samples, steady_at: detector.steady_at })
    }

    /// Submits a remap command and waits for its verdicts.
    pub fn remap(&self, id: SessionId, command: MappingCommand) -> Result<Verdicts, SessionError> {
        let (reply_tx, reply_rx) = mpsc::channel();
        self.sender(id)?
            .send(Message::Remap(command, reply_tx))
            .map_err(|_| SessionError::Closed(id))?;
        Ok(reply_rx.recv().map_err(|_| SessionError::Closed(id))??)
    }

    /// Advances `n` steps and waits until they are published.
    pub fn step(&self, id: SessionId, n: usize) -> Result<SessionSnapshot, SessionError> {
        let (reply_tx, reply_rx) = mpsc::channel();
        self.sender(id)?
            .send(Message::Step(n, reply_tx))
            .map_err(|_| SessionError::Closed(id))?;
        reply_rx.recv().map_err(|_| SessionError::Closed(id))?;
        self.state(id)
    }

    pub fn remove(&self, id: SessionId) -> Result<(), SessionError> {
        let handle = self.lock().remove(&id).ok_or(SessionError::UnknownSession(id))?;
        drop(handle);
        Ok(())
    }
}

struct Worker {
    design: DesignSpec,
    config: SimConfig,
    remap: RemapSession,
    snapshot: Arc<RwLock<SessionSnapshot>>,
    history: History,
    input: JoystickInput,
    mapping: Option<ChannelMapping>,
    state: SimState,
    detector: SteadyDetector,
    fault: Option<String>,
}

impl Worker {
    fn run(mut self, rx: Receiver<Message>, pacing: Pacing) {
        let design = self.design.clone();
        let sim = match Simulator::new(&design, self.config) {
            Ok(sim) => sim,
            Err(e) => {
                self.fault = Some(e.to_string());
                self.publish();
                return;
            }
        };
        self.detector.push(&self.state);
        self.publish();
        let mut next_tick = Instant::now() + TICK;
        loop {
            let msg = match pacing {
                Pacing::Stepped => rx.recv().map_err(|_| RecvTimeoutError::Disconnected),
                Pacing::RealTime => rx.recv_timeout(next_tick.saturating_duration_since(Instant::now())),
            };
            match msg {
                Ok(Message::Stop) | Err(RecvTimeoutError::Disconnected) => break,
                Ok(Message::Input(input)) => self.input = input,
                Ok(Message::Remap(command, reply)) => {
                    let result = self.remap.submit(&self.design, command);
                    if result.is_ok() {
                        self.mapping = Some(ChannelMapping::from(&command));
                    }
                    let _ = reply.send(result);
                }
                Ok(Message::Step(n, reply)) => {
                    for _ in 0..n {
                        self.tick(&sim);
                    }
                    self.publish();
                    let _ = reply.send(());
                    continue;
                }
                Err(RecvTimeoutError::Timeout) => {
                    self.tick(&sim);
                    next_tick += TICK;
                    // Do not try to catch up after a stall.
                    let now = Instant::now();
                    if next_tick < now {
                        next_tick = now + TICK;
                    }
                }
            }
            self.publish();
        }
    }

    fn actuation(&self) -> Actuation {
        let n = self.design.thrusters.len();
        match &self.mapping {
            Some(mapping) => match mix(mapping, &self.input) {
                Ok(mixed) => self.remap.plant().actuate(&self.design, &mixed),
                Err(_) => Actuation::idle(n),
            },
            None => Actuation::idle(n),
        }
    }

    fn tick(&mut self, sim: &Simulator<'_>) {
        if self.fault.is_some() {
            return;
        }
        match sim.step(&self.state, &self.actuation()) {
            Ok(next) => {
                self.state = next;
                self.detector.push(&next);
                let mut history = self.history.lock().unwrap_or_else(|e| e.into_inner());
                if history.len() == HISTORY_LIMIT {
                    history.pop_front();
                }
                history.push_back(next);
            }
            Err(e) => self.fault = Some(e.to_string()),
        }
    }

    fn publish(&self) {
        let snap = SessionSnapshot {
            id: self.snapshot.read().unwrap_or_else(|e| e.into_inner()).id,
            design_name: self.design.name.clone(),
            state: self.state,
            input: self.input,
            command: self.remap.command().map(|c| c.render()),
            mapping: self.mapping.clone(),
            stage: self.remap.stage(),
            verdicts: self.remap.verdicts(),
            steady: self.detector.is_steady(),
            fault: self.fault.clone(),
        };
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = snap;
    }
}
