//! In-memory workbench sessions with optional snapshots on disk.
//!
//! A session owns one uploaded dataset (kept both in original units and
//! normalized), an optional active model, a list of rules and a view kind.
//! Every mutation bumps the revision; callers pass the revision they last saw
//! and get a [`SessionError::Conflict`] when it is stale.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use glc3d_core::formats::{ModelDocument, RuleDocument, FORMAT_VERSION};
use glc3d_core::linear_model::{search_discriminant, SearchParams};
use glc3d_core::rules::apply_discrimination_rule;
use glc3d_core::scene::SceneBuilder;
use glc3d_core::{canonical, Dataset, Error, LayoutConfig, LinearModel, LoadConfig, Rule, RuleStats, Scene, ViewKind};
use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

/// A payload problem tied to one field of the request body.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, ThisError)]
pub enum SessionError {
    #[error("no session '{0}'")]
    NotFound(String),
    #[error("stale revision {given}; current revision is {current}")]
    Conflict { given: u64, current: u64 },
    #[error("invalid payload")]
    Invalid(Vec<FieldError>),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("snapshot {path}: {source}")]
    Snapshot { path: PathBuf, source: std::io::Error },
}

pub type SessionResult<T> = std::result::Result<T, SessionError>;

/// The model a session uses for f-dependent views, discriminant rules and the
/// model statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveModel {
    pub model: LinearModel,
    pub positive_class: String,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    source: Dataset,
    dataset: Dataset,
    pub model: Option<ActiveModel>,
    pub rules: Vec<Rule>,
    pub view: ViewKind,
    pub revision: u64,
    pub layout: LayoutConfig,
}

/// Loads a CSV and normalizes it the same way for the CLI and the service.
pub fn load_dataset(csv: &[u8], class_column: &str) -> glc3d_core::Result<(Dataset, Dataset)> {
    let config = LoadConfig { class_column: class_column.to_string(), ..LoadConfig::default() };
    let source = Dataset::load_csv(csv, &config)?;
    let normalized = source.normalize();
    Ok((source, normalized))
}

/// Rejects rules whose dimensionality differs from the data's.
pub fn check_rule(rule: &Rule, dataset: &Dataset) -> glc3d_core::Result<()> {
    let (r, d) = (rule.block.dimensionality(), dataset.dimensionality());
    if r != d {
        return Err(Error::Validation(format!("rule has {r} attributes but the dataset has {d}")));
    }
    Ok(())
}

/// Rejects models whose dimensionality differs from the data's.
pub fn check_model(model: &LinearModel, dataset: &Dataset) -> glc3d_core::Result<()> {
    let (m, d) = (model.dimensionality(), dataset.dimensionality());
    if m != d {
        return Err(Error::Validation(format!("model has {m} coefficients but the dataset has {d}")));
    }
    Ok(())
}

impl Session {
    pub fn new(id: impl Into<String>, source: Dataset) -> Self {
        let dataset = source.normalize();
        Self {
            id: id.into(),
            source,
            dataset,
            model: None,
            rules: Vec::new(),
            view: ViewKind::Spc2d,
            revision: 0,
            layout: LayoutConfig::default(),
        }
    }

    /// The normalized data every computation runs on.
    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn check_revision(&self, given: u64) -> SessionResult<()> {
        if given == self.revision {
            Ok(())
        } else {
            Err(SessionError::Conflict { given, current: self.revision })
        }
    }

    fn bump(&mut self) -> u64 {
        self.revision += 1;
        self.revision
    }

    pub fn model_stats(&self) -> SessionResult<Option<RuleStats>> {
        match &self.model {
            None => Ok(None),
            Some(m) => Ok(Some(apply_discrimination_rule(&m.model, &self.dataset, &m.positive_class)?)),
        }
    }

    pub fn rule_stats(&self, index: usize) -> SessionResult<RuleStats> {
        let rule = self.rules.get(index).ok_or_else(|| {
            SessionError::Invalid(vec![FieldError::new(
                "index",
                format!("rule {index} does not exist ({} rules)", self.rules.len()),
            )])
        })?;
        Ok(rule.evaluate(&self.dataset, self.model.as_ref().map(|m| &m.model))?)
    }

    pub fn all_rule_stats(&self) -> SessionResult<Vec<RuleStats>> {
        (0..self.rules.len()).map(|i| self.rule_stats(i)).collect()
    }

    pub fn scene(&self, view: Option<ViewKind>, reference_case: Option<usize>) -> SessionResult<Scene> {
        let mut builder = SceneBuilder::new(&self.dataset, view.unwrap_or(self.view))
            .model(self.model.as_ref().map(|m| &m.model))
            .rules(&self.rules)
            .layout(self.layout);
        if let Some(id) = reference_case {
            builder = builder.reference_case(id);
        }
        Ok(builder.build()?)
    }

    /// Replaces (index < len) or appends (index == len) a rule.
    pub fn put_rule(&mut self, revision: u64, index: usize, doc: RuleDocument) -> SessionResult<(u64, RuleStats)> {
        self.check_revision(revision)?;
        let errors = self.validate_rule(index, &doc);
        if !errors.is_empty() {
            return Err(SessionError::Invalid(errors));
        }
        let rule = doc.into_rule()?;
        if index == self.rules.len() {
            self.rules.push(rule);
        } else {
            self.rules[index] = rule;
        }
        let stats = self.rule_stats(index)?;
        Ok((self.bump(), stats))
    }

    pub fn delete_rule(&mut self, revision: u64, index: usize) -> SessionResult<u64> {
        self.check_revision(revision)?;
        if index >= self.rules.len() {
            return Err(SessionError::Invalid(vec![FieldError::new(
                "index",
                format!("rule {index} does not exist ({} rules)", self.rules.len()),
            )]));
        }
        self.rules.remove(index);
        Ok(self.bump())
    }

    fn validate_rule(&self, index: usize, doc: &RuleDocument) -> Vec<FieldError> {
        let mut errors = Vec::new();
        let n = self.dataset.dimensionality();
        if index > self.rules.len() {
            errors.push(FieldError::new(
                "index",
                format!("rule index {index} skips past the {} existing rules", self.rules.len()),
            ));
        }
        if doc.format_version != FORMAT_VERSION {
            errors.push(FieldError::new(
                "rule.format_version",
                format!("unsupported version {} (supported: {FORMAT_VERSION})", doc.format_version),
            ));
        }
        if doc.dimension != n {
            errors.push(FieldError::new(
                "rule.dimension",
                format!("rule has {} attributes but the dataset has {n}", doc.dimension),
            ));
        }
        if !self.dataset.class_labels().contains(&doc.predicted_class) {
            errors.push(FieldError::new(
                "rule.predicted_class",
                format!(
                    "unknown class '{}' (valid: {})",
                    doc.predicted_class,
                    self.dataset.class_labels().join(", ")
                ),
            ));
        }
        if doc.discriminant.is_some() && self.model.is_none() {
            errors.push(FieldError::new(
                "rule.discriminant",
                "rule needs a discriminant but the session has no model",
            ));
        }
        let mut seen = vec![false; doc.dimension];
        for (i, e) in doc.intervals.iter().enumerate() {
            let field = |name: &str| format!("rule.intervals[{i}].{name}");
            if e.attribute >= doc.dimension {
                errors.push(FieldError::new(
                    field("attribute"),
                    format!("attribute {} is outside dimension {}", e.attribute, doc.dimension),
                ));
            } else if std::mem::replace(&mut seen[e.attribute], true) {
                errors.push(FieldError::new(field("attribute"), format!("attribute {} listed twice", e.attribute)));
            }
            for (name, v) in [("lower", e.lower), ("upper", e.upper)] {
                if !(0.0..=1.0).contains(&v) {
                    errors.push(FieldError::new(field(name), format!("{v} is outside [0, 1]")));
                }
            }
            if e.lower > e.upper {
                errors.push(FieldError::new(
                    field("upper"),
                    format!("upper {} is below lower {}", e.upper, e.lower),
                ));
            }
        }
        errors
    }

    pub fn put_model(&mut self, revision: u64, request: ModelRequest) -> SessionResult<(u64, RuleStats)> {
        self.check_revision(revision)?;
        let errors = self.validate_model(&request);
        if !errors.is_empty() {
            return Err(SessionError::Invalid(errors));
        }
        let active = match (request.coefficients, request.search) {
            (Some(c), None) => {
                let threshold = request.threshold.expect("validated");
                ActiveModel {
                    model: LinearModel::from_raw(c)?.with_threshold(threshold),
                    positive_class: request.positive_class,
                }
            }
            (None, Some(search)) => {
                let params = SearchParams::default().with_seed(search.seed);
                let (model, _) = search_discriminant(&self.dataset, &request.positive_class, &params)?;
                ActiveModel { model, positive_class: request.positive_class }
            }
            _ => unreachable!("validated"),
        };
        self.model = Some(active);
        let stats = self.model_stats()?.expect("model just set");
        Ok((self.bump(), stats))
    }

    fn validate_model(&self, r: &ModelRequest) -> Vec<FieldError> {
        let mut errors = Vec::new();
        if !self.dataset.class_labels().contains(&r.positive_class) {
            errors.push(FieldError::new(
                "positive_class",
                format!(
                    "unknown class '{}' (valid: {})",
                    r.positive_class,
                    self.dataset.class_labels().join(", ")
                ),
            ));
        }
        match (&r.coefficients, &r.search) {
            (Some(_), Some(_)) | (None, None) => errors.push(FieldError::new(
                "coefficients",
                "give exactly one of 'coefficients' and 'search'",
            )),
            (Some(c), None) => {
                let n = self.dataset.dimensionality();
                if c.len() != n {
                    errors.push(FieldError::new(
                        "coefficients",
                        format!("{} coefficients for {n} attributes", c.len()),
                    ));
                }
                if c.iter().all(|v| *v == 0.0) {
                    errors.push(FieldError::new("coefficients", "all coefficients are zero"));
                }
                match r.threshold {
                    None => errors.push(FieldError::new("threshold", "required with 'coefficients'")),
                    Some(t) if !t.is_finite() => errors.push(FieldError::new("threshold", "must be finite")),
                    Some(_) => {}
                }
            }
            (None, Some(_)) => {
                if r.threshold.is_some() {
                    errors.push(FieldError::new("threshold", "the search chooses the threshold"));
                }
            }
        }
        errors
    }

    pub fn set_view(&mut self, revision: u64, view: ViewKind) -> SessionResult<u64> {
        self.check_revision(revision)?;
        self.view = view;
        Ok(self.bump())
    }

    /// Writes the session as documented text formats under `dir/<id>/`.
    pub fn save(&self, dir: &Path) -> SessionResult<()> {
        let root = dir.join(&self.id);
        let io = |path: &Path, e| SessionError::Snapshot { path: path.to_path_buf(), source: e };
        let staging = dir.join(format!(".{}.tmp", self.id));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| io(&staging, e))?;
        }
        fs::create_dir_all(&staging).map_err(|e| io(&staging, e))?;
        let write = |name: &str, bytes: &[u8]| {
            let path = staging.join(name);
            fs::write(&path, bytes).map_err(|e| io(&path, e))
        };
        let mut csv = Vec::new();
        self.source.write_csv(&mut csv)?;
        write("dataset.csv", &csv)?;
        if let Some(m) = &self.model {
            let doc = ModelDocument::new(m.model.clone(), Some(m.positive_class.clone()));
            write("model.txt", doc.to_text().as_bytes())?;
        }
        for (i, rule) in self.rules.iter().enumerate() {
            write(&format!("rule-{i}.json"), &glc3d_core::formats::rule_to_bytes(rule))?;
        }
        let meta = SnapshotMeta {
            format_version: FORMAT_VERSION,
            revision: self.revision,
            view: self.view,
            rules: self.rules.len(),
            layout: self.layout,
        };
        write("session.json", &canonical::to_bytes(&meta))?;
        if root.exists() {
            fs::remove_dir_all(&root).map_err(|e| io(&root, e))?;
        }
        fs::rename(&staging, &root).map_err(|e| io(&root, e))?;
        Ok(())
    }

    pub fn load(dir: &Path, id: &str) -> SessionResult<Session> {
        let root = dir.join(id);
        let read = |name: &str| {
            let path = root.join(name);
            fs::read(&path).map_err(|e| SessionError::Snapshot { path, source: e })
        };
        let meta: SnapshotMeta = canonical::from_slice(&read("session.json")?)?;
        let (source, _) = load_dataset(&read("dataset.csv")?, "class")?;
        let mut session = Session::new(id, source);
        session.revision = meta.revision;
        session.view = meta.view;
        session.layout = meta.layout;
        if root.join("model.txt").exists() {
            let text = String::from_utf8_lossy(&read("model.txt")?).into_owned();
            let doc = ModelDocument::parse(&text)?;
            session.model = Some(ActiveModel {
                model: doc.model,
                positive_class: doc.positive_class.ok_or_else(|| {
                    Error::Validation("snapshot model lacks positive_class".into())
                })?,
            });
        }
        for i in 0..meta.rules {
            session.rules.push(glc3d_core::formats::rule_from_bytes(&read(&format!("rule-{i}.json"))?)?);
        }
        Ok(session)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotMeta {
    format_version: u32,
    revision: u64,
    view: ViewKind,
    rules: usize,
    layout: LayoutConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    #[serde(default)]
    pub seed: u64,
}

/// Body of a model update: either explicit raw coefficients with a
/// normalized threshold, or a search request.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRequest {
    pub positive_class: String,
    #[serde(default)]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub search: Option<SearchRequest>,
}

/// All live sessions. Each session sits behind its own lock so distinct
/// sessions never contend.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    snapshot_dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn new(snapshot_dir: Option<PathBuf>) -> Self {
        Self { sessions: RwLock::default(), snapshot_dir }
    }

    /// Opens a store and reloads every snapshot found in `dir`.
    pub fn restore(dir: PathBuf) -> SessionResult<Self> {
        let store = Self::new(Some(dir.clone()));
        if dir.exists() {
            let entries = fs::read_dir(&dir).map_err(|e| SessionError::Snapshot { path: dir.clone(), source: e })?;
            let mut ids: Vec<String> = entries
                .filter_map(|e| e.ok())
                .filter(|e| e.path().is_dir())
                .filter_map(|e| e.file_name().into_string().ok())
                .filter(|name| !name.starts_with('.'))
                .collect();
            ids.sort();
            let mut map = store.sessions.write().expect("session map lock");
            for id in ids {
                let session = Session::load(&dir, &id)?;
                map.insert(id, Arc::new(Mutex::new(session)));
            }
        }
        Ok(store)
    }

    pub fn create(&self, source: Dataset) -> SessionResult<Session> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session::new(id.clone(), source);
        self.persist(&session)?;
        self.sessions
            .write()
            .expect("session map lock")
            .insert(id, Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    fn get(&self, id: &str) -> SessionResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_string()))
    }

    /// Runs a read-only closure against a session.
    pub fn read<T>(&self, id: &str, f: impl FnOnce(&Session) -> SessionResult<T>) -> SessionResult<T> {
        let session = self.get(id)?;
        let guard = session.lock().expect("session lock");
        f(&guard)
    }

    /// Runs a mutation on a working copy and commits it (and its snapshot)
    /// only when it succeeds.
    pub fn mutate<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> SessionResult<T>) -> SessionResult<T> {
        let session = self.get(id)?;
        let mut guard = session.lock().expect("session lock");
        let mut draft = guard.clone();
        let out = f(&mut draft)?;
        self.persist(&draft)?;
        *guard = draft;
        Ok(out)
    }

    pub fn delete(&self, id: &str) -> SessionResult<()> {
        let removed = self.sessions.write().expect("session map lock").remove(id);
        if removed.is_none() {
            return Err(SessionError::NotFound(id.to_string()));
        }
        if let Some(dir) = &self.snapshot_dir {
            let root = dir.join(id);
            if root.exists() {
                fs::remove_dir_all(&root).map_err(|e| SessionError::Snapshot { path: root, source: e })?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn persist(&self, session: &Session) -> SessionResult<()> {
        match &self.snapshot_dir {
            Some(dir) => session.save(dir),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use glc3d_core::formats::IntervalEntry;

    const CSV: &str = "a,b,class\n0,0,X\n1,2,X\n2,4,Y\n3,6,Y\n";

    fn session() -> Session {
        let (source, _) = load_dataset(CSV.as_bytes(), "class").unwrap();
        Session::new("s", source)
    }

    fn rule_doc(lower: f64, upper: f64) -> RuleDocument {
        RuleDocument {
            format_version: 1,
            dimension: 2,
            predicted_class: "X".into(),
            discriminant: None,
            intervals: vec![IntervalEntry { attribute: 0, lower, upper }],
        }
    }

    #[test]
    fn revisions_advance_and_conflicts_report_current() {
        let mut s = session();
        let (rev, stats) = s.put_rule(0, 0, rule_doc(0.0, 0.5)).unwrap();
        assert_eq!(rev, 1);
        assert_eq!(stats.covered, 2);
        match s.put_rule(0, 0, rule_doc(0.0, 0.4)) {
            Err(SessionError::Conflict { given: 0, current: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(s.revision, 1);
    }

    #[test]
    fn field_errors_name_fields() {
        let mut s = session();
        let mut doc = rule_doc(0.7, 0.2);
        doc.dimension = 3;
        doc.predicted_class = "Q".into();
        let Err(SessionError::Invalid(errors)) = s.put_rule(0, 0, doc) else { panic!() };
        let fields: Vec<&str> = errors.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, ["rule.dimension", "rule.predicted_class", "rule.intervals[0].upper"]);
        assert_eq!(s.revision, 0);
    }

    #[test]
    fn model_requests() {
        let mut s = session();
        let bad = ModelRequest {
            positive_class: "X".into(),
            coefficients: Some(vec![1.0]),
            threshold: None,
            search: None,
        };
        let Err(SessionError::Invalid(errors)) = s.put_model(0, bad) else { panic!() };
        assert_eq!(errors.len(), 2);
        let search = ModelRequest {
            positive_class: "Y".into(),
            coefficients: None,
            threshold: None,
            search: Some(SearchRequest { seed: 1 }),
        };
        let (rev, stats) = s.put_model(0, search).unwrap();
        assert_eq!(rev, 1);
        assert_eq!(stats.accuracy, 1.0);
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::new(Some(dir.path().to_path_buf()));
        let (source, _) = load_dataset(CSV.as_bytes(), "class").unwrap();
        let id = store.create(source).unwrap().id;
        store.mutate(&id, |s| s.put_rule(0, 0, rule_doc(0.0, 0.5)).map(|_| ())).unwrap();
        store
            .mutate(&id, |s| {
                s.put_model(
                    1,
                    ModelRequest {
                        positive_class: "X".into(),
                        coefficients: Some(vec![-1.0, 0.5]),
                        threshold: Some(-0.2),
                        search: None,
                    },
                )
                .map(|_| ())
            })
            .unwrap();
        let restored = SessionStore::restore(dir.path().to_path_buf()).unwrap();
        assert_eq!(restored.len(), 1);
        let a = store.read(&id, |s| Ok((s.revision, s.rules.clone(), s.model.clone(), s.dataset().clone()))).unwrap();
        let b = restored.read(&id, |s| Ok((s.revision, s.rules.clone(), s.model.clone(), s.dataset().clone()))).unwrap();
        assert_eq!(a, b);
        store.delete(&id).unwrap();
        assert!(!dir.path().join(&id).exists());
    }

    #[test]
    fn failed_mutation_leaves_session_untouched() {
        let store = SessionStore::new(None);
        let (source, _) = load_dataset(CSV.as_bytes(), "class").unwrap();
        let id = store.create(source).unwrap().id;
        assert!(store.mutate(&id, |s| s.put_rule(0, 5, rule_doc(0.0, 0.5))).is_err());
        assert_eq!(store.read(&id, |s| Ok(s.revision)).unwrap(), 0);
        assert!(matches!(store.read("nope", |_| Ok(())), Err(SessionError::NotFound(_))));
    }
}
