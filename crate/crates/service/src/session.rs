//! Sessions, trial sequencing and the durable logs behind them.
//!
//! Two append-only line-delimited logs live under `<data-root>/logs`:
//! `sessions.jsonl` holds one [`SessionRecord`] per created session and
//! `responses.jsonl` one [`ResponseRecord`] per accepted response. Every
//! line is written with a single append and synced to disk before the
//! request is acknowledged, and opening a [`Service`] replays both logs.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use dotedge::dataset::{frame_file, DatasetKind, DatasetManifest, MANIFEST_FILE};
use dotedge::evaluation::{
    read_response_log, Answer, Response, ResponseRecord, ELAPSED_CAP, RESPONSE_SCHEMA_VERSION, TIME_LIMIT,
};
use dotedge::rng::{stream, Domain};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::display::DisplayGeometry;
use crate::error::{Result, ServiceError};

pub const SESSION_SCHEMA_VERSION: u32 = 1;
pub const PAYLOAD_SCHEMA_VERSION: u32 = 1;
pub const LOG_DIR: &str = "logs";
pub const SESSIONS_LOG: &str = "sessions.jsonl";
pub const RESPONSES_LOG: &str = "responses.jsonl";
pub const MAX_NONCE_LEN: usize = 128;

/// One line of the session log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub schema_version: u32,
    pub session_id: String,
    pub subject: String,
    pub kind: DatasetKind,
    pub seed: u64,
    pub created_at_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display: Option<DisplayGeometry>,
}

/// Experiment kind as a number 1 to 4 or a dataset name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KindSelector {
    Number(u64),
    Name(String),
}

impl KindSelector {
    pub fn resolve(&self) -> Result<DatasetKind> {
        let kind = match self {
            KindSelector::Number(n) => (1..=4).contains(n).then(|| DatasetKind::ALL[*n as usize - 1]),
            KindSelector::Name(s) => DatasetKind::parse(s),
        };
        kind.ok_or_else(|| ServiceError::BadRequest(format!("unknown experiment kind {self:?}")))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreateSession {
    pub kind: KindSelector,
    pub subject: String,
    pub seed: u64,
    #[serde(default)]
    pub display: Option<DisplayGeometry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub schema_version: u32,
    pub session_id: String,
    pub subject: String,
    pub kind: DatasetKind,
    pub seed: u64,
    pub total: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Two clicks on the edge or the reject box.
    Click,
    /// Yes or no: is there an edge.
    YesNo,
}

impl Task {
    pub fn for_kind(kind: DatasetKind) -> Self {
        if kind.is_video() {
            Task::YesNo
        } else {
            Task::Click
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Media {
    Image { url: String },
    Frames { fps: f64, frame_count: usize, urls: Vec<String> },
}

/// What the UI needs to run one trial. Carries no ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialPayload {
    pub schema_version: u32,
    pub session_id: String,
    /// Zero-based position in the session.
    pub trial: usize,
    pub total: usize,
    pub stimulus_id: String,
    pub task: Task,
    pub time_limit_s: f64,
    pub width: usize,
    pub height: usize,
    pub media: Media,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Next {
    Trial(TrialPayload),
    End {
        schema_version: u32,
        session_id: String,
        total: usize,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub nonce: String,
    pub response: Response,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub schema_version: u32,
    pub session_id: String,
    pub nonce: String,
    pub seq: u64,
    pub stimulus_id: String,
    /// The response ended its trial.
    pub trial_complete: bool,
    /// The nonce had been stored before; nothing new was written.
    pub duplicate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplaySummary {
    #[serde(flatten)]
    pub geometry: DisplayGeometry,
    pub degrees_per_pixel: f64,
    pub image_degrees: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub session_id: String,
    pub subject: String,
    pub kind: DatasetKind,
    pub seed: u64,
    pub total: usize,
    pub completed: usize,
    pub remaining: usize,
    /// Stored records including dismissed clicks.
    pub records: u64,
    pub dismissed_clicks: u64,
    pub timeouts: u64,
    pub open_stimulus: Option<String>,
    /// The session was unfinished when the service restarted.
    pub resumed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display: Option<DisplaySummary>,
}

struct Dataset {
    manifest: DatasetManifest,
    /// Top-level directories holding the stimulus files.
    stimulus_dirs: Vec<String>,
}

struct Session {
    record: SessionRecord,
    order: Vec<usize>,
    /// Index into `order` of the current trial.
    cursor: usize,
    /// The stimulus at `cursor` has been served and awaits a final answer.
    open: bool,
    next_seq: u64,
    acks: HashMap<String, Ack>,
    dismissed: u64,
    timeouts: u64,
    resumed: bool,
}

impl Session {
    fn apply(&mut self, record: &ResponseRecord) -> Ack {
        let response = &record.response;
        let ack = Ack {
            schema_version: SESSION_SCHEMA_VERSION,
            session_id: record.session_id.clone(),
            nonce: record.nonce.clone(),
            seq: record.seq,
            stimulus_id: response.stimulus_id().to_string(),
            trial_complete: response.is_final(),
            duplicate: false,
        };
        self.acks.insert(record.nonce.clone(), ack.clone());
        self.next_seq = self.next_seq.max(record.seq + 1);
        match response {
            Response::Dismissed { .. } => self.dismissed += 1,
            Response::Click(c) if c.timed_out => self.timeouts += 1,
            Response::YesNo(y) if y.answer == Answer::Timeout => self.timeouts += 1,
            _ => {}
        }
        if response.is_final() {
            self.cursor += 1;
            self.open = false;
        }
        ack
    }
}

struct Logs {
    sessions: File,
    responses: File,
    sessions_path: PathBuf,
    responses_path: PathBuf,
}

/// Appends one JSON line and syncs it to disk.
fn append_line(file: &mut File, path: &Path, value: &impl Serialize) -> Result<()> {
    let mut line = serde_json::to_vec(value).expect("log records serialize");
    line.push(b'\n');
    file.write_all(&line).map_err(|e| ServiceError::io(path, e))?;
    file.sync_data().map_err(|e| ServiceError::io(path, e))
}

/// Opens a log for appending, dropping a trailing partial line left by a
/// crash mid-write. Such a line was never acknowledged. Returns the number
/// of bytes dropped.
fn open_log(path: &Path) -> Result<(File, u64)> {
    let mut file = OpenOptions::new()
        .read(true)
        .append(true)
        .create(true)
        .open(path)
        .map_err(|e| ServiceError::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| ServiceError::io(path, e))?;
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let dropped = (bytes.len() - keep) as u64;
    if dropped > 0 {
        file.set_len(keep as u64).map_err(|e| ServiceError::io(path, e))?;
        file.sync_data().map_err(|e| ServiceError::io(path, e))?;
    }
    Ok((file, dropped))
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

/// Seeded presentation order over `n` stimuli.
pub fn permutation(seed: u64, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, Domain::Session, 0));
    order
}

pub struct Service {
    root: PathBuf,
    datasets: BTreeMap<DatasetKind, Dataset>,
    sessions: Mutex<BTreeMap<String, Arc<Mutex<Session>>>>,
    logs: Mutex<Logs>,
    repaired_bytes: u64,
}

impl Service {
    /// Loads every dataset found under `root` and replays the logs.
    pub fn open(root: &Path) -> Result<Self> {
        let mut datasets = BTreeMap::new();
        for kind in DatasetKind::ALL {
            let path = root.join(kind.name()).join(MANIFEST_FILE);
            if path.exists() {
                datasets.insert(kind, load_dataset(&path)?);
            }
        }
        let log_dir = root.join(LOG_DIR);
        std::fs::create_dir_all(&log_dir).map_err(|e| ServiceError::io(&log_dir, e))?;
        let sessions_path = log_dir.join(SESSIONS_LOG);
        let responses_path = log_dir.join(RESPONSES_LOG);
        let (sessions_file, a) = open_log(&sessions_path)?;
        let (responses_file, b) = open_log(&responses_path)?;

        let mut sessions = BTreeMap::new();
        let text = std::fs::read_to_string(&sessions_path).map_err(|e| ServiceError::io(&sessions_path, e))?;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let record: SessionRecord = serde_json::from_str(line).map_err(|e| {
                dotedge::Error::Schema(format!("{}:{}: {e}", sessions_path.display(), i + 1))
            })?;
            if record.schema_version != SESSION_SCHEMA_VERSION {
                return Err(dotedge::Error::Schema(format!(
                    "{}:{}: session schema version {}",
                    sessions_path.display(),
                    i + 1,
                    record.schema_version
                ))
                .into());
            }
            let total = datasets.get(&record.kind).map(|d: &Dataset| d.manifest.entries.len()).ok_or_else(|| {
                dotedge::Error::Schema(format!("session {} needs the missing {} dataset", record.session_id, record.kind))
            })?;
            sessions.insert(record.session_id.clone(), new_session(record, total));
        }
        for record in read_response_log(&responses_path)? {
            let session = sessions.get_mut(&record.session_id).ok_or_else(|| {
                dotedge::Error::Schema(format!("response {} for unknown session {}", record.nonce, record.session_id))
            })?;
            session.apply(&record);
        }
        for s in sessions.values_mut() {
            s.resumed = s.cursor < s.order.len() && s.next_seq > 0;
        }

        Ok(Service {
            root: root.to_path_buf(),
            datasets,
            sessions: Mutex::new(sessions.into_iter().map(|(k, v)| (k, Arc::new(Mutex::new(v)))).collect()),
            logs: Mutex::new(Logs {
                sessions: sessions_file,
                responses: responses_file,
                sessions_path,
                responses_path,
            }),
            repaired_bytes: a + b,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Bytes of torn trailing lines dropped from the logs at startup.
    pub fn repaired_bytes(&self) -> u64 {
        self.repaired_bytes
    }

    pub fn kinds(&self) -> impl Iterator<Item = DatasetKind> + '_ {
        self.datasets.keys().copied()
    }

    /// `(kind, directory)` pairs whose files may be served to clients.
    pub fn stimulus_dirs(&self) -> Vec<(DatasetKind, String)> {
        self.datasets
            .iter()
            .flat_map(|(k, d)| d.stimulus_dirs.iter().map(move |s| (*k, s.clone())))
            .collect()
    }

    pub fn create_session(&self, req: &CreateSession) -> Result<SessionCreated> {
        let kind = req.kind.resolve()?;
        if req.subject.trim().is_empty() {
            return Err(ServiceError::Invalid("subject label is empty".into()));
        }
        if let Some(d) = &req.display {
            d.validate()?;
        }
        let total = self
            .datasets
            .get(&kind)
            .ok_or_else(|| ServiceError::NotFound(format!("no {kind} dataset under {}", self.root.display())))?
            .manifest
            .entries
            .len();
        let mut sessions = lock(&self.sessions);
        let record = SessionRecord {
            schema_version: SESSION_SCHEMA_VERSION,
            session_id: format!("s{:04}", sessions.len()),
            subject: req.subject.clone(),
            kind,
            seed: req.seed,
            created_at_ms: now_ms(),
            display: req.display,
        };
        {
            let mut logs = lock(&self.logs);
            let Logs { sessions: file, sessions_path, .. } = &mut *logs;
            append_line(file, sessions_path, &record)?;
        }
        let created = SessionCreated {
            schema_version: SESSION_SCHEMA_VERSION,
            session_id: record.session_id.clone(),
            subject: record.subject.clone(),
            kind,
            seed: record.seed,
            total,
        };
        sessions.insert(record.session_id.clone(), Arc::new(Mutex::new(new_session(record, total))));
        Ok(created)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>> {
        lock(&self.sessions)
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("no session {id}")))
    }

    /// Serves the current trial. Asking again before answering returns the
    /// same trial, so a reloaded client cannot skip or repeat stimuli.
    pub fn next(&self, session_id: &str) -> Result<Next> {
        let session = self.session(session_id)?;
        let mut s = lock(&session);
        let total = s.order.len();
        if s.cursor >= total {
            return Ok(Next::End {
                schema_version: PAYLOAD_SCHEMA_VERSION,
                session_id: session_id.to_string(),
                total,
            });
        }
        let dataset = &self.datasets[&s.record.kind];
        let entry = &dataset.manifest.entries[s.order[s.cursor]];
        let base = format!("/stimuli/{}/{}", s.record.kind.name(), entry.path);
        let media = match dataset.manifest.video {
            Some(video) if s.record.kind.is_video() => {
                let frame_count = video.frame_count();
                Media::Frames {
                    fps: video.fps,
                    frame_count,
                    urls: (0..frame_count).map(|i| format!("{base}/{}", frame_file(i))).collect(),
                }
            }
            _ => Media::Image { url: base },
        };
        s.open = true;
        Ok(Next::Trial(TrialPayload {
            schema_version: PAYLOAD_SCHEMA_VERSION,
            session_id: session_id.to_string(),
            trial: s.cursor,
            total,
            stimulus_id: entry.id.clone(),
            task: Task::for_kind(s.record.kind),
            time_limit_s: TIME_LIMIT,
            width: dataset.manifest.canvas.0,
            height: dataset.manifest.canvas.1,
            media,
        }))
    }

    /// Stores a response to the open trial. A repeated nonce returns the
    /// original acknowledgement without storing anything.
    pub fn record(&self, session_id: &str, submit: &SubmitResponse) -> Result<Ack> {
        if submit.nonce.is_empty() || submit.nonce.len() > MAX_NONCE_LEN {
            return Err(ServiceError::BadRequest(format!("nonce must have 1 to {MAX_NONCE_LEN} bytes")));
        }
        let session = self.session(session_id)?;
        let mut s = lock(&session);
        if let Some(ack) = s.acks.get(&submit.nonce) {
            return Ok(Ack { duplicate: true, ..ack.clone() });
        }
        let dataset = &self.datasets[&s.record.kind];
        let response = &submit.response;
        let current = (s.cursor < s.order.len()).then(|| &dataset.manifest.entries[s.order[s.cursor]].id);
        match current {
            Some(id) if s.open && id == response.stimulus_id() => {}
            _ => {
                return Err(ServiceError::Conflict(format!(
                    "stimulus {} is not the open trial of session {session_id}",
                    response.stimulus_id()
                )))
            }
        }
        validate_response(response, s.record.kind, dataset.manifest.canvas)?;

        let record = ResponseRecord {
            schema_version: RESPONSE_SCHEMA_VERSION,
            session_id: session_id.to_string(),
            subject: s.record.subject.clone(),
            nonce: submit.nonce.clone(),
            seq: s.next_seq,
            received_at_ms: now_ms(),
            response: response.clone(),
        };
        {
            let mut logs = lock(&self.logs);
            let Logs { responses: file, responses_path, .. } = &mut *logs;
            append_line(file, responses_path, &record)?;
        }
        Ok(s.apply(&record))
    }

    pub fn summary(&self, session_id: &str) -> Result<Summary> {
        let session = self.session(session_id)?;
        let s = lock(&session);
        let total = s.order.len();
        let dataset = &self.datasets[&s.record.kind];
        let open_stimulus = s.open.then(|| dataset.manifest.entries[s.order[s.cursor]].id.clone());
        Ok(Summary {
            schema_version: SESSION_SCHEMA_VERSION,
            session_id: session_id.to_string(),
            subject: s.record.subject.clone(),
            kind: s.record.kind,
            seed: s.record.seed,
            total,
            completed: s.cursor,
            remaining: total - s.cursor,
            records: s.next_seq,
            dismissed_clicks: s.dismissed,
            timeouts: s.timeouts,
            open_stimulus,
            resumed: s.resumed,
            display: s.record.display.map(|g| DisplaySummary {
                geometry: g,
                degrees_per_pixel: g.degrees_per_pixel(),
                image_degrees: g.degrees_for(dataset.manifest.canvas.0 as f64),
            }),
        })
    }
}

fn new_session(record: SessionRecord, total: usize) -> Session {
    Session {
        order: permutation(record.seed, total),
        record,
        cursor: 0,
        open: false,
        next_seq: 0,
        acks: HashMap::new(),
        dismissed: 0,
        timeouts: 0,
        resumed: false,
    }
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let manifest = DatasetManifest::read(path)?;
    let mut stimulus_dirs: Vec<String> = Vec::new();
    for e in &manifest.entries {
        let mut parts = Path::new(&e.path).components();
        let (Some(Component::Normal(top)), Some(_)) = (parts.next(), parts.next()) else {
            return Err(dotedge::Error::Schema(format!("stimulus {} has path {:?} outside a subdirectory", e.id, e.path)).into());
        };
        if Path::new(&e.path).components().any(|c| !matches!(c, Component::Normal(_))) {
            return Err(dotedge::Error::Schema(format!("stimulus {} has path {:?}", e.id, e.path)).into());
        }
        let top = top.to_string_lossy().into_owned();
        if !stimulus_dirs.contains(&top) {
            stimulus_dirs.push(top);
        }
    }
    Ok(Dataset { manifest, stimulus_dirs })
}

fn validate_response(response: &Response, kind: DatasetKind, canvas: (usize, usize)) -> Result<()> {
    let invalid = |e: dotedge::Error| ServiceError::Invalid(e.to_string());
    let inside = |x: i64, y: i64| (0..canvas.0 as i64).contains(&x) && (0..canvas.1 as i64).contains(&y);
    match (response, Task::for_kind(kind)) {
        (Response::Click(c), Task::Click) => {
            c.validate().map_err(invalid)?;
            if let Some(&(x, y)) = c.clicks.iter().find(|&&(x, y)| !inside(x, y)) {
                return Err(ServiceError::Invalid(format!("click ({x}, {y}) lies outside the image")));
            }
            if c.reject && c.clicks.len() > 1 {
                return Err(ServiceError::Invalid("a rejected answer has at most one image click".into()));
            }
            Ok(())
        }
        (Response::YesNo(y), Task::YesNo) => y.validate().map_err(invalid),
        (Response::Dismissed { x, y, elapsed, .. }, Task::Click) => {
            if inside(*x, *y) {
                return Err(ServiceError::Invalid(format!("dismissed click ({x}, {y}) lies inside the image")));
            }
            if !(*elapsed >= 0.0 && *elapsed <= ELAPSED_CAP) {
                return Err(ServiceError::Invalid(format!("elapsed time {elapsed} s outside [0, {ELAPSED_CAP}]")));
            }
            Ok(())
        }
        (r, task) => Err(ServiceError::Invalid(format!(
            "{} response does not fit the {task:?} task of {kind}",
            match r {
                Response::Click(_) => "click",
                Response::YesNo(_) => "yes/no",
                Response::Dismissed { .. } => "dismissed click",
            }
        ))),
    }
}
