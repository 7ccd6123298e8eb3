//! Session store behind the HTTP API.
//!
//! Each session holds one comparison matrix that is edited a pair at a time.
//! The report is recomputed on every accepted write. It is withheld while the
//! comparison graph is disconnected.

mod api;

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::http::StatusCode;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use uuid::Uuid;

use crate::error::Error;
use crate::indices::{report, InconsistencyReport};
use crate::pcm::{Format, Pcm, PcmDocument, Tolerance};

pub use api::{router, serve};

pub const MIN_LABELS: usize = 2;
pub const MAX_LABELS: usize = 50;
pub const DEFAULT_TOP_K: usize = 3;
/// Comparisons contributing no more than this are left out of the top-k list.
pub const TOP_K_THRESHOLD: f64 = 1e-9;

/// An error that maps onto an HTTP response `{code, message, detail}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ServiceError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    fn not_found(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no session {id}"),
        )
    }

    fn disconnected(components: Vec<Vec<String>>) -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "disconnected",
            "comparison graph is disconnected; no report until every alternative is linked",
        )
        .with_detail(json!({ "components": components }))
    }

    fn from_core(err: Error, labels: &[String]) -> Self {
        match err {
            Error::Disconnected { components } => {
                Self::disconnected(component_labels(&components, labels))
            }
            Error::Invalid(v) => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid_matrix",
                Error::Invalid(v.clone()).to_string(),
            )
            .with_detail(json!({ "violations": v })),
            Error::NoConvergence { .. } | Error::NumericalMismatch { .. } => Self::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "numerical",
                err.to_string(),
            ),
            Error::Io(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "io", err.to_string()),
            other => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid_argument",
                other.to_string(),
            ),
        }
    }
}

impl std::fmt::Display for ServiceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ServiceError {}

type ServiceResult<T> = std::result::Result<T, ServiceError>;

fn component_labels(components: &[Vec<usize>], labels: &[String]) -> Vec<Vec<String>> {
    components
        .iter()
        .map(|c| c.iter().map(|&i| labels[i].clone()).collect())
        .collect()
}

/// An alternative named by index or by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AltRef {
    Index(usize),
    Label(String),
}

impl From<usize> for AltRef {
    fn from(i: usize) -> Self {
        AltRef::Index(i)
    }
}

impl From<&str> for AltRef {
    fn from(s: &str) -> Self {
        AltRef::Label(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    pub a: usize,
    pub b: usize,
    pub old: f64,
    pub new: f64,
}

#[derive(Debug, Clone)]
enum ReportState {
    Ready(Box<InconsistencyReport>),
    Disconnected(Vec<Vec<usize>>),
}

impl ReportState {
    fn compute(pcm: &Pcm, gamma: f64) -> Result<Self, Error> {
        let components = pcm.adjacency().components();
        if components.len() > 1 {
            return Ok(ReportState::Disconnected(components));
        }
        Ok(ReportState::Ready(Box::new(report(pcm, gamma)?)))
    }
}

#[derive(Debug)]
struct Session {
    id: Uuid,
    pcm: Pcm,
    gamma: f64,
    history: Vec<HistoryEntry>,
    report: ReportState,
}

impl Session {
    fn resolve(&self, r: &AltRef) -> ServiceResult<usize> {
        let n = self.pcm.n();
        match r {
            AltRef::Index(i) if *i < n => Ok(*i),
            AltRef::Index(i) => Err(ServiceError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid_argument",
                format!("alternative index {i} out of range for n = {n}"),
            )),
            AltRef::Label(l) => self.pcm.label_index(l).ok_or_else(|| {
                ServiceError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "invalid_argument",
                    format!("unknown alternative {l:?}"),
                )
            }),
        }
    }

    fn view(&self) -> SessionView {
        let n = self.pcm.n();
        let components = match &self.report {
            ReportState::Ready(_) => Vec::new(),
            ReportState::Disconnected(c) => component_labels(c, self.pcm.labels()),
        };
        SessionView {
            id: self.id.to_string(),
            labels: self.pcm.labels().to_vec(),
            gamma: self.gamma,
            entries: (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| (!self.pcm.is_missing(a, b)).then(|| self.pcm.get(a, b)))
                        .collect()
                })
                .collect(),
            complete: self.pcm.is_complete(),
            connected: components.is_empty(),
            components,
            history: self.history.clone(),
        }
    }

    fn outcome(&self) -> EntryOutcome {
        match &self.report {
            ReportState::Ready(r) => EntryOutcome::Ok { report: r.clone() },
            ReportState::Disconnected(c) => EntryOutcome::Disconnected {
                components: component_labels(c, self.pcm.labels()),
            },
        }
    }
}

/// Snapshot of a session as served by `GET /sessions/{id}`. Missing
/// comparisons are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionView {
    pub id: String,
    pub labels: Vec<String>,
    pub gamma: f64,
    pub entries: Vec<Vec<Option<f64>>>,
    pub complete: bool,
    pub connected: bool,
    pub components: Vec<Vec<String>>,
    pub history: Vec<HistoryEntry>,
}

/// Result of an accepted entry update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EntryOutcome {
    Ok { report: Box<InconsistencyReport> },
    Disconnected { components: Vec<Vec<String>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankedComparison {
    pub a: usize,
    pub b: usize,
    pub label_a: String,
    pub label_b: String,
    /// Current `W_ab`.
    pub value: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportResponse {
    pub report: InconsistencyReport,
    /// Comparisons in descending order of contribution.
    pub ranked: Vec<RankedComparison>,
    /// The first `k` of `ranked` above the threshold.
    pub top_k: Vec<RankedComparison>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum JournalRecord {
    Create {
        id: Uuid,
        labels: Vec<String>,
        gamma: f64,
        entries: Option<Vec<Vec<Option<f64>>>>,
    },
    Set {
        id: Uuid,
        #[serde(flatten)]
        entry: HistoryEntry,
    },
    Delete {
        id: Uuid,
    },
}

/// In-memory sessions with an optional append-only journal.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<Uuid, Arc<Mutex<Session>>>>,
    journal: Option<Mutex<File>>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn check_gamma(gamma: f64) -> ServiceResult<f64> {
    if gamma.is_finite() {
        Ok(gamma)
    } else {
        Err(ServiceError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_argument",
            format!("gamma must be finite, got {gamma}"),
        ))
    }
}

fn check_labels(labels: &[String]) -> ServiceResult<()> {
    let bad =
        |msg: String| ServiceError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_labels", msg);
    if !(MIN_LABELS..=MAX_LABELS).contains(&labels.len()) {
        return Err(bad(format!(
            "need between {MIN_LABELS} and {MAX_LABELS} labels, got {}",
            labels.len()
        )));
    }
    for (i, l) in labels.iter().enumerate() {
        if l.trim().is_empty() {
            return Err(bad(format!("label {i} is empty")));
        }
        if labels[..i].contains(l) {
            return Err(bad(format!("duplicate label {l:?}")));
        }
    }
    Ok(())
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens a store backed by a JSON-lines journal, replaying any records
    /// already in it. A truncated final line is ignored.
    pub fn with_journal(path: &Path) -> Result<Self, Error> {
        let mut store = Self::new();
        if path.exists() {
            let lines: Vec<String> = BufReader::new(File::open(path)?)
                .lines()
                .collect::<std::io::Result<_>>()?;
            let last = lines.len().saturating_sub(1);
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<JournalRecord>(line) {
                    Ok(rec) => store
                        .apply(rec)
                        .map_err(|e| Error::Parse(format!("journal line {}: {e}", i + 1)))?,
                    Err(_) if i == last => break,
                    Err(e) => return Err(Error::Parse(format!("journal line {}: {e}", i + 1))),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        store.journal = Some(Mutex::new(file));
        Ok(store)
    }

    fn apply(&self, rec: JournalRecord) -> ServiceResult<()> {
        match rec {
            JournalRecord::Create {
                id,
                labels,
                gamma,
                entries,
            } => self.insert(id, labels, gamma, entries).map(|_| ()),
            JournalRecord::Set { id, entry } => {
                let s = self.session(&id)?;
                let mut s = s.lock().expect("session lock");
                let pcm = s.pcm.clone();
                Self::commit(&mut s, &pcm, entry)
            }
            JournalRecord::Delete { id } => {
                self.sessions.write().expect("store lock").remove(&id);
                Ok(())
            }
        }
    }

    fn record(&self, rec: &JournalRecord) -> ServiceResult<()> {
        if let Some(j) = &self.journal {
            let line = serde_json::to_string(rec).expect("journal records serialize");
            let mut f = j.lock().expect("journal lock");
            writeln!(f, "{line}")
                .and_then(|_| f.flush())
                .map_err(|e| ServiceError::from_core(e.into(), &[]))?;
        }
        Ok(())
    }

    fn insert(
        &self,
        id: Uuid,
        labels: Vec<String>,
        gamma: f64,
        entries: Option<Vec<Vec<Option<f64>>>>,
    ) -> ServiceResult<Uuid> {
        check_labels(&labels)?;
        check_gamma(gamma)?;
        let n = labels.len();
        let pcm = match entries {
            Some(entries) => PcmDocument {
                labels: Some(labels.clone()),
                entries,
            }
            .into_pcm(Tolerance::DEFAULT),
            None => Pcm::new(DMatrix::identity(n, n), Some(labels.clone())),
        }
        .map_err(|e| ServiceError::from_core(e, &labels))?;
        let report =
            ReportState::compute(&pcm, gamma).map_err(|e| ServiceError::from_core(e, &labels))?;
        let session = Session {
            id,
            pcm,
            gamma,
            history: Vec::new(),
            report,
        };
        self.sessions
            .write()
            .expect("store lock")
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// Starts a session. Without `entries` every comparison is missing.
    pub fn create(
        &self,
        labels: Vec<String>,
        gamma: Option<f64>,
        entries: Option<Vec<Vec<Option<f64>>>>,
    ) -> ServiceResult<Uuid> {
        let id = Uuid::new_v4();
        let gamma = gamma.unwrap_or(1.0);
        self.insert(id, labels.clone(), gamma, entries.clone())?;
        self.record(&JournalRecord::Create {
            id,
            labels,
            gamma,
            entries,
        })?;
        Ok(id)
    }

    fn session(&self, id: &Uuid) -> ServiceResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::not_found(&id.to_string()))
    }

    pub fn parse_id(id: &str) -> ServiceResult<Uuid> {
        Uuid::parse_str(id).map_err(|_| ServiceError::not_found(id))
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &Uuid) -> ServiceResult<SessionView> {
        Ok(self.session(id)?.lock().expect("session lock").view())
    }

    fn commit(s: &mut Session, pcm: &Pcm, entry: HistoryEntry) -> ServiceResult<()> {
        let labels = pcm.labels().to_vec();
        let next = pcm
            .with_entry(entry.a, entry.b, entry.new)
            .map_err(|e| ServiceError::from_core(e, &labels))?;
        let report = ReportState::compute(&next, s.gamma)
            .map_err(|e| ServiceError::from_core(e, &labels))?;
        s.pcm = next;
        s.report = report;
        s.history.push(entry);
        Ok(())
    }

    /// Sets `W_ab = value` and `W_ba = 1 / value`; `value == 0` retracts the
    /// comparison. Writers to one session are serialized.
    pub fn set_entry(
        &self,
        id: &Uuid,
        a: &AltRef,
        b: &AltRef,
        value: f64,
    ) -> ServiceResult<EntryOutcome> {
        let session = self.session(id)?;
        let mut s = session.lock().expect("session lock");
        let (a, b) = (s.resolve(a)?, s.resolve(b)?);
        let entry = HistoryEntry {
            timestamp: now_ms(),
            a,
            b,
            old: s.pcm.get(a, b),
            new: value,
        };
        let pcm = s.pcm.clone();
        Self::commit(&mut s, &pcm, entry)?;
        if let Err(e) = self.record(&JournalRecord::Set { id: *id, entry }) {
            s.pcm = pcm;
            s.history.pop();
            s.report = ReportState::compute(&s.pcm, s.gamma).expect("previous state was valid");
            return Err(e);
        }
        Ok(s.outcome())
    }

    /// The cached report, or a fresh one when `gamma` differs from the
    /// session's.
    pub fn report(&self, id: &Uuid, gamma: Option<f64>, k: usize) -> ServiceResult<ReportResponse> {
        let session = self.session(id)?;
        let s = session.lock().expect("session lock");
        let labels = s.pcm.labels();
        let report = match (&s.report, gamma) {
            (ReportState::Disconnected(c), _) => {
                return Err(ServiceError::disconnected(component_labels(c, labels)))
            }
            (ReportState::Ready(_), Some(g)) if check_gamma(g)? != s.gamma => {
                crate::indices::report(&s.pcm, g).map_err(|e| ServiceError::from_core(e, labels))?
            }
            (ReportState::Ready(r), _) => (**r).clone(),
        };
        let ranked: Vec<RankedComparison> = report
            .ranked_comparisons()
            .into_iter()
            .map(|c| RankedComparison {
                a: c.a,
                b: c.b,
                label_a: labels[c.a].clone(),
                label_b: labels[c.b].clone(),
                value: s.pcm.get(c.a, c.b),
                contribution: c.value,
            })
            .collect();
        let top_k = ranked
            .iter()
            .filter(|c| c.contribution > TOP_K_THRESHOLD)
            .take(k)
            .cloned()
            .collect();
        Ok(ReportResponse {
            report,
            ranked,
            top_k,
        })
    }

    pub fn export(&self, id: &Uuid, format: Format) -> ServiceResult<String> {
        let session = self.session(id)?;
        let s = session.lock().expect("session lock");
        Ok(match format {
            Format::Csv => s.pcm.to_csv(),
            Format::Json => s.pcm.to_json(),
        })
    }

    pub fn delete(&self, id: &Uuid) -> ServiceResult<()> {
        let removed = self.sessions.write().expect("store lock").remove(id);
        match removed {
            Some(_) => self.record(&JournalRecord::Delete { id: *id }),
            None => Err(ServiceError::not_found(&id.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn label_bounds() {
        let store = SessionStore::new();
        assert!(store.create(labels(&["x"]), None, None).is_err());
        assert!(store.create(labels(&["x", "x"]), None, None).is_err());
        let many: Vec<String> = (0..51).map(|i| format!("l{i}")).collect();
        let err = store.create(many, None, None).unwrap_err();
        assert_eq!(err.code, "invalid_labels");
        let fifty: Vec<String> = (0..50).map(|i| format!("l{i}")).collect();
        assert!(store.create(fifty, None, None).is_ok());
    }

    #[test]
    fn fresh_session_is_disconnected() {
        let store = SessionStore::new();
        let id = store.create(labels(&["A", "B", "D"]), None, None).unwrap();
        let err = store.report(&id, None, 3).unwrap_err();
        assert_eq!(err.status, StatusCode::CONFLICT);
        assert_eq!(err.detail["components"], json!([["A"], ["B"], ["D"]]));
    }

    #[test]
    fn two_way_session() {
        let store = SessionStore::new();
        let id = store.create(labels(&["x", "y"]), None, None).unwrap();
        let out = store.set_entry(&id, &"x".into(), &"y".into(), 2.0).unwrap();
        let EntryOutcome::Ok { report } = out else {
            panic!("expected a report")
        };
        assert!(report.sdot.abs() < 1e-12);
        assert!((report.scale[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!(report.complete);
        let r = store.report(&id, None, 3).unwrap();
        assert!(r.top_k.is_empty());
    }

    #[test]
    fn set_and_retract_restores_report() {
        let store = SessionStore::new();
        let id = store
            .create(
                labels(&["p", "q", "r"]),
                None,
                Some(vec![
                    vec![None, Some(2.0), Some(3.0)],
                    vec![Some(0.5), None, None],
                    vec![Some(1.0 / 3.0), None, None],
                ]),
            )
            .unwrap();
        let before = store.report(&id, None, 3).unwrap().report;
        store.set_entry(&id, &1.into(), &2.into(), 5.0).unwrap();
        store.set_entry(&id, &1.into(), &2.into(), 0.0).unwrap();
        let after = store.report(&id, None, 3).unwrap().report;
        assert!((before.sdot - after.sdot).abs() < 1e-12);
        for (x, y) in before.scale.iter().zip(&after.scale) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(store.get(&id).unwrap().history.len(), 2);
    }

    #[test]
    fn rejected_writes_leave_no_trace() {
        let store = SessionStore::new();
        let id = store.create(labels(&["x", "y"]), None, None).unwrap();
        for (a, b, v) in [(0, 0, 2.0), (0, 1, f64::NAN), (0, 1, -1.0), (0, 5, 1.0)] {
            assert!(store.set_entry(&id, &a.into(), &b.into(), v).is_err());
        }
        assert!(store
            .set_entry(&id, &"x".into(), &"nope".into(), 1.0)
            .is_err());
        assert!(store.get(&id).unwrap().history.is_empty());
    }

    #[test]
    fn journal_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sessions.jsonl");
        let (kept, dropped) = {
            let store = SessionStore::with_journal(&path).unwrap();
            let kept = store
                .create(labels(&["a", "b", "c"]), Some(2.0), None)
                .unwrap();
            store.set_entry(&kept, &0.into(), &1.into(), 3.0).unwrap();
            store.set_entry(&kept, &1.into(), &2.into(), 4.0).unwrap();
            let dropped = store.create(labels(&["u", "v"]), None, None).unwrap();
            store.delete(&dropped).unwrap();
            (store.get(&kept).unwrap(), dropped)
        };
        // A crash mid-write leaves a partial last line.
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        write!(f, "{{\"op\":\"set\",\"id\"").unwrap();

        let store = SessionStore::with_journal(&path).unwrap();
        let id = Uuid::parse_str(&kept.id).unwrap();
        assert_eq!(store.get(&id).unwrap(), kept);
        assert!(store.get(&dropped).is_err());
        assert_eq!(store.len(), 1);
    }
}
