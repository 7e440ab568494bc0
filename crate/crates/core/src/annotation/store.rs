use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{
    agreement_from_pairs, consensus, grouped_summaries, AgreementReport, AnnotationError, AnnotationRecord, Category,
    GroupRelevance, RelevanceSummary,
};

/// An entailment offered for annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub entailment_id: String,
    pub entity: String,
    pub prefix: String,
    pub prompt: String,
    pub text: String,
    pub model_tag: String,
}

type Key = (String, String);

/// Current label per (entailment, annotator), backed by an optional
/// append-only JSONL log that keeps every submission.
#[derive(Debug)]
pub struct AnnotationStore {
    tasks: Vec<Task>,
    index: HashMap<String, usize>,
    require_known: bool,
    /// Annotators an entailment needs before it enters consensus tables.
    pub min_annotators: usize,
    state: RwLock<BTreeMap<Key, AnnotationRecord>>,
    log: Mutex<Option<(PathBuf, File)>>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> AnnotationError {
    AnnotationError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

impl AnnotationStore {
    /// A store that accepts labels only for the given tasks.
    pub fn new(tasks: Vec<Task>) -> Self {
        let index = tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (t.entailment_id.clone(), i))
            .collect();
        Self {
            tasks,
            index,
            require_known: true,
            min_annotators: 2,
            state: RwLock::new(BTreeMap::new()),
            log: Mutex::new(None),
        }
    }

    /// A store that accepts any entailment id.
    pub fn permissive() -> Self {
        Self {
            require_known: false,
            ..Self::new(Vec::new())
        }
    }

    /// Replays `path` if it exists, then appends every later submission
    /// to it.
    pub fn with_log(self, path: &Path) -> Result<Self, AnnotationError> {
        if path.exists() {
            for record in read_log(path)? {
                self.apply(record)?;
            }
        }
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        *self.log.lock().unwrap() = Some((path.to_path_buf(), file));
        Ok(self)
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, entailment_id: &str) -> Option<&Task> {
        self.index.get(entailment_id).map(|&i| &self.tasks[i])
    }

    fn check(&self, record: &AnnotationRecord) -> Result<(), AnnotationError> {
        record.validate()?;
        if self.require_known && !self.index.contains_key(&record.entailment_id) {
            return Err(AnnotationError::UnknownEntailment(record.entailment_id.clone()));
        }
        Ok(())
    }

    fn apply(&self, record: AnnotationRecord) -> Result<(), AnnotationError> {
        self.check(&record)?;
        let key = (record.entailment_id.clone(), record.annotator_id.clone());
        self.state.write().unwrap().insert(key, record);
        Ok(())
    }

    /// Validates, logs and upserts one record. Submissions are serialized,
    /// so the log order is the order in which they took effect.
    pub fn submit(&self, record: AnnotationRecord) -> Result<AnnotationRecord, AnnotationError> {
        self.check(&record)?;
        let mut log = self.log.lock().unwrap();
        if let Some((path, file)) = log.as_mut() {
            let line = serde_json::to_string(&record).expect("records serialize");
            writeln!(file, "{line}")
                .and_then(|_| file.flush())
                .map_err(|e| io_err(path, e))?;
        }
        self.apply(record.clone())?;
        Ok(record)
    }

    /// Current records in (entailment, annotator) order.
    pub fn records(&self) -> Vec<AnnotationRecord> {
        self.state.read().unwrap().values().cloned().collect()
    }

    pub fn record(&self, entailment_id: &str, annotator_id: &str) -> Option<AnnotationRecord> {
        self.state
            .read()
            .unwrap()
            .get(&(entailment_id.to_string(), annotator_id.to_string()))
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.state.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn annotators(&self) -> Vec<String> {
        let state = self.state.read().unwrap();
        state.keys().map(|(_, a)| a.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Up to `limit` tasks the annotator has not labeled, in task order.
    pub fn pending_tasks(&self, annotator_id: &str, limit: usize) -> Vec<Task> {
        let state = self.state.read().unwrap();
        self.tasks
            .iter()
            .filter(|t| !state.contains_key(&(t.entailment_id.clone(), annotator_id.to_string())))
            .take(limit)
            .cloned()
            .collect()
    }

    pub fn agreement(&self, a: &str, b: &str) -> Result<AgreementReport, AnnotationError> {
        self.agreement_where(a, b, |_| true)
    }

    /// [`Self::agreement`] over the entailments accepted by `keep`.
    pub fn agreement_where(
        &self,
        a: &str,
        b: &str,
        keep: impl Fn(&str) -> bool,
    ) -> Result<AgreementReport, AnnotationError> {
        let state = self.state.read().unwrap();
        let pairs: Vec<_> = state
            .iter()
            .filter(|((e, ann), _)| ann == a && keep(e))
            .filter_map(|((e, _), ra)| state.get(&(e.clone(), b.to_string())).map(|rb| (ra, rb)))
            .collect();
        agreement_from_pairs(a, b, &pairs)
    }

    /// Records per entailment, in entailment id order.
    fn by_entailment(&self) -> BTreeMap<String, Vec<AnnotationRecord>> {
        let mut out: BTreeMap<String, Vec<AnnotationRecord>> = BTreeMap::new();
        for r in self.state.read().unwrap().values() {
            out.entry(r.entailment_id.clone()).or_default().push(r.clone());
        }
        out
    }

    fn consensus_items(&self) -> Vec<(String, Option<Category>)> {
        self.by_entailment()
            .into_iter()
            .filter(|(_, rs)| rs.len() >= self.min_annotators.max(1))
            .map(|(e, rs)| (e, consensus(&rs.iter().collect::<Vec<_>>())))
            .collect()
    }

    /// Consensus category per entailment with enough annotators; `None`
    /// marks a disagreement.
    pub fn consensus_map(&self) -> BTreeMap<String, Option<Category>> {
        self.consensus_items().into_iter().collect()
    }

    pub fn relevance_summary(&self) -> RelevanceSummary {
        let mut s = RelevanceSummary::default();
        for (_, c) in self.consensus_items() {
            s.add(c);
        }
        s
    }

    /// Consensus summaries per group. `group_of` maps an entailment id to
    /// its group; ids mapped to `None` are left out. Groups follow the
    /// order of their first entailment id.
    pub fn per_group_relevance(&self, group_of: impl Fn(&str) -> Option<String>) -> Vec<GroupRelevance> {
        grouped_summaries(
            self.consensus_items()
                .into_iter()
                .filter_map(|(e, c)| group_of(&e).map(|g| (g, c))),
        )
    }

    /// [`Self::per_group_relevance`] keyed by the task's prefix.
    pub fn per_prompt_relevance(&self) -> Vec<GroupRelevance> {
        self.per_group_relevance(|e| self.task(e).map(|t| t.prefix.clone()))
    }
}

/// Every record in a log file, in submission order.
pub fn read_log(path: &Path) -> Result<Vec<AnnotationRecord>, AnnotationError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| AnnotationError::Malformed {
            path: path.display().to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn task(id: &str, prefix: &str) -> Task {
        Task {
            entailment_id: id.into(),
            entity: "Jane".into(),
            prefix: prefix.into(),
            prompt: format!("Jane {prefix}"),
            text: "kind person.".into(),
            model_tag: "m".into(),
        }
    }

    fn rec(e: &str, a: &str, rel: bool, ch: bool) -> AnnotationRecord {
        AnnotationRecord {
            timestamp: "2024-01-01T00:00:00Z".into(),
            ..AnnotationRecord::new(e, a, rel, ch)
        }
    }

    #[test]
    fn submit_contract() {
        let store = AnnotationStore::new(vec![task("e1", "is a very")]);
        assert!(store.submit(rec("e1", "a1", true, true)).is_ok());
        assert_eq!(
            store.submit(rec("e1", "a1", false, true)),
            Err(AnnotationError::InvariantViolation("e1".into()))
        );
        assert_eq!(
            store.submit(rec("e9", "a1", true, true)),
            Err(AnnotationError::UnknownEntailment("e9".into()))
        );
        store.submit(rec("e1", "a1", false, false)).unwrap();
        assert_eq!(store.len(), 1);
        assert!(!store.record("e1", "a1").unwrap().relevant);
        assert!(AnnotationStore::permissive().submit(rec("anything", "a", true, false)).is_ok());
    }

    #[test]
    fn log_replay_reproduces_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let tasks = vec![task("e1", "p"), task("e2", "p")];
        let store = AnnotationStore::new(tasks.clone()).with_log(&path).unwrap();
        store.submit(rec("e1", "a1", true, false)).unwrap();
        store.submit(rec("e2", "a1", true, true)).unwrap();
        store.submit(rec("e1", "a1", true, true)).unwrap();
        store.submit(rec("e1", "a2", false, false)).unwrap();
        assert_eq!(read_log(&path).unwrap().len(), 4);
        let replayed = AnnotationStore::new(tasks).with_log(&path).unwrap();
        assert_eq!(replayed.records(), store.records());
    }

    #[test]
    fn pending_tasks_skip_labeled() {
        let store = AnnotationStore::new(vec![task("e1", "p"), task("e2", "p"), task("e3", "p")]);
        store.submit(rec("e2", "a1", true, false)).unwrap();
        let ids: Vec<_> = store.pending_tasks("a1", 5).into_iter().map(|t| t.entailment_id).collect();
        assert_eq!(ids, ["e1", "e3"]);
        assert_eq!(store.pending_tasks("a2", 1).len(), 1);
    }

    #[test]
    fn consensus_tables() {
        let store = AnnotationStore::new((1..=5).map(|i| task(&format!("e{i}"), if i < 5 { "p" } else { "q" })).collect());
        for (e, x, y) in [
            ("e1", (true, true), (true, true)),
            ("e2", (true, false), (true, false)),
            ("e3", (false, false), (false, false)),
            ("e4", (true, true), (true, false)),
        ] {
            store.submit(rec(e, "a", x.0, x.1)).unwrap();
            store.submit(rec(e, "b", y.0, y.1)).unwrap();
        }
        store.submit(rec("e5", "a", true, true)).unwrap();
        let s = store.relevance_summary();
        assert_eq!((s.non_relevant, s.only_relevant, s.relevant_and_characterizing), (1, 1, 1));
        assert_eq!(s.total_relevant, 2);
        assert_eq!(s.disagreements, 1);
        let rows = store.per_prompt_relevance();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].group, "p");
        let ag = store.agreement("a", "b").unwrap();
        assert_eq!(ag.n, 4);
        assert!(matches!(store.agreement("a", "zz"), Err(AnnotationError::NoOverlap(..))));
    }

    #[test]
    fn concurrent_submitters() {
        let store = AnnotationStore::new((0..200).map(|i| task(&format!("e{i}"), "p")).collect());
        std::thread::scope(|s| {
            for a in ["a", "b", "c", "d"] {
                let store = &store;
                s.spawn(move || {
                    for i in 0..200 {
                        store.submit(rec(&format!("e{i}"), a, i % 2 == 0, i % 4 == 0)).unwrap();
                    }
                });
            }
        });
        assert_eq!(store.len(), 800);
    }
}
