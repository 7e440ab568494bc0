//! Human judgments of entailments: a label store with an append-only log,
//! Cohen's kappa between annotator pairs, consensus relevance summaries,
//! CSV import and export, and the HTTP service an annotation UI talks to.

mod csvio;
mod service;
mod store;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Ratio;

pub use csvio::{export_csv, import_csv, read_csv};
pub use service::{router, AgreementBody, AgreementQuery, ErrorBody, HealthBody, LabelBody, ServiceState, StatsBody, TasksQuery};
pub use store::{read_log, AnnotationStore, Task};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnotationError {
    #[error("unknown entailment {0}")]
    UnknownEntailment(String),
    #[error("entailment {0} is marked characterizing but not relevant")]
    InvariantViolation(String),
    #[error("annotator id is empty")]
    EmptyAnnotator,
    #[error("label lists have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("label lists are empty")]
    EmptyLabels,
    #[error("kappa is undefined: expected agreement is 1")]
    DegenerateMarginals,
    #[error("annotators {0} and {1} share no entailments")]
    NoOverlap(String, String),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("{path}:{line}: {reason}")]
    Malformed { path: String, line: usize, reason: String },
}

/// One annotator's judgment of one entailment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub entailment_id: String,
    pub annotator_id: String,
    pub relevant: bool,
    pub characterizing: bool,
    /// RFC 3339.
    pub timestamp: String,
    /// Expert judgment of correctness; kept but not used by any table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
}

impl AnnotationRecord {
    pub fn new(entailment_id: &str, annotator_id: &str, relevant: bool, characterizing: bool) -> Self {
        Self {
            entailment_id: entailment_id.to_string(),
            annotator_id: annotator_id.to_string(),
            relevant,
            characterizing,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            correct: None,
        }
    }

    pub fn validate(&self) -> Result<(), AnnotationError> {
        if self.annotator_id.trim().is_empty() {
            return Err(AnnotationError::EmptyAnnotator);
        }
        if self.characterizing && !self.relevant {
            return Err(AnnotationError::InvariantViolation(self.entailment_id.clone()));
        }
        Ok(())
    }

    pub fn category(&self) -> Category {
        match (self.relevant, self.characterizing) {
            (false, _) => Category::NonRelevant,
            (true, false) => Category::OnlyRelevant,
            (true, true) => Category::RelevantAndCharacterizing,
        }
    }
}

/// The three mutually exclusive judgment outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    NonRelevant,
    OnlyRelevant,
    RelevantAndCharacterizing,
}

/// `(p_o - p_e) / (1 - p_e)` for two binary label lists.
pub fn cohen_kappa(a: &[bool], b: &[bool]) -> Result<f64, AnnotationError> {
    if a.len() != b.len() {
        return Err(AnnotationError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AnnotationError::EmptyLabels);
    }
    // (p_o - p_e) / (1 - p_e) scaled by n^2, so the only rounding is the
    // final division
    let n = a.len() as u128;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as u128;
    let a_true = a.iter().filter(|x| **x).count() as u128;
    let b_true = b.iter().filter(|x| **x).count() as u128;
    let chance = a_true * b_true + (n - a_true) * (n - b_true);
    if chance == n * n {
        return Err(AnnotationError::DegenerateMarginals);
    }
    let num = (n * agree) as f64 - chance as f64;
    Ok(num / (n * n - chance) as f64)
}

/// Agreement of two annotators over the entailments both labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub annotator_a: String,
    pub annotator_b: String,
    /// Co-annotated entailments.
    pub n: usize,
    /// `None` when kappa is undefined for the dimension.
    pub kappa_relevant: Option<f64>,
    pub kappa_characterizing: Option<f64>,
    /// Among entailments where both agree on the characterizing label,
    /// the share both marked characterizing.
    pub pct_characterizing: Option<Ratio>,
}

pub(crate) fn agreement_from_pairs(
    a: &str,
    b: &str,
    pairs: &[(&AnnotationRecord, &AnnotationRecord)],
) -> Result<AgreementReport, AnnotationError> {
    if pairs.is_empty() {
        return Err(AnnotationError::NoOverlap(a.to_string(), b.to_string()));
    }
    let rel_a: Vec<bool> = pairs.iter().map(|(x, _)| x.relevant).collect();
    let rel_b: Vec<bool> = pairs.iter().map(|(_, y)| y.relevant).collect();
    let ch_a: Vec<bool> = pairs.iter().map(|(x, _)| x.characterizing).collect();
    let ch_b: Vec<bool> = pairs.iter().map(|(_, y)| y.characterizing).collect();
    let agreed = pairs.iter().filter(|(x, y)| x.characterizing == y.characterizing);
    let (both, agreed_n) = agreed.fold((0u64, 0u64), |(c, n), (x, _)| (c + u64::from(x.characterizing), n + 1));
    Ok(AgreementReport {
        annotator_a: a.to_string(),
        annotator_b: b.to_string(),
        n: pairs.len(),
        kappa_relevant: cohen_kappa(&rel_a, &rel_b).ok(),
        kappa_characterizing: cohen_kappa(&ch_a, &ch_b).ok(),
        pct_characterizing: Ratio::new(both, agreed_n),
    })
}

/// Consensus counts: entailments whose annotators all give the same
/// category. Entailments with fewer than the required number of
/// annotators are not counted; entailments with conflicting categories
/// count as disagreements.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceSummary {
    pub non_relevant: u64,
    pub only_relevant: u64,
    pub relevant_and_characterizing: u64,
    pub total_relevant: u64,
    pub disagreements: u64,
}

impl RelevanceSummary {
    pub fn consensus_total(&self) -> u64 {
        self.non_relevant + self.total_relevant
    }

    fn pct(&self, n: u64) -> Option<Ratio> {
        Ratio::new(n, self.consensus_total())
    }

    pub fn pct_non_relevant(&self) -> Option<Ratio> {
        self.pct(self.non_relevant)
    }

    pub fn pct_only_relevant(&self) -> Option<Ratio> {
        self.pct(self.only_relevant)
    }

    pub fn pct_relevant_and_characterizing(&self) -> Option<Ratio> {
        self.pct(self.relevant_and_characterizing)
    }

    pub fn pct_total_relevant(&self) -> Option<Ratio> {
        self.pct(self.total_relevant)
    }

    /// Share of relevant outputs that also characterize.
    pub fn pct_characterizing_given_relevant(&self) -> Option<Ratio> {
        Ratio::new(self.relevant_and_characterizing, self.total_relevant)
    }

    pub fn add(&mut self, category: Option<Category>) {
        match category {
            None => self.disagreements += 1,
            Some(Category::NonRelevant) => self.non_relevant += 1,
            Some(Category::OnlyRelevant) => {
                self.only_relevant += 1;
                self.total_relevant += 1;
            }
            Some(Category::RelevantAndCharacterizing) => {
                self.relevant_and_characterizing += 1;
                self.total_relevant += 1;
            }
        }
    }
}

/// Summary counts for one group of entailments (one prefix-prompt).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRelevance {
    pub group: String,
    pub summary: RelevanceSummary,
}

impl GroupRelevance {
    pub fn pct_relevant_and_characterizing(&self) -> Option<Ratio> {
        self.summary.pct_relevant_and_characterizing()
    }

    pub fn pct_relevant(&self) -> Option<Ratio> {
        self.summary.pct_total_relevant()
    }

    pub fn pct_characterizing_given_relevant(&self) -> Option<Ratio> {
        self.summary.pct_characterizing_given_relevant()
    }
}

/// The consensus category of one entailment's records.
pub(crate) fn consensus(records: &[&AnnotationRecord]) -> Option<Category> {
    let first = records.first()?.category();
    records.iter().all(|r| r.category() == first).then_some(first)
}

/// Groups summaries by key, keeping first-appearance order.
pub(crate) fn grouped_summaries(
    items: impl IntoIterator<Item = (String, Option<Category>)>,
) -> Vec<GroupRelevance> {
    let mut order: Vec<String> = Vec::new();
    let mut map: BTreeMap<String, RelevanceSummary> = BTreeMap::new();
    for (group, category) in items {
        if !map.contains_key(&group) {
            order.push(group.clone());
        }
        map.entry(group).or_default().add(category);
    }
    order
        .into_iter()
        .map(|g| GroupRelevance {
            summary: map.remove(&g).unwrap(),
            group: g,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(tt: usize, tf: usize, ft: usize, ff: usize) -> (Vec<bool>, Vec<bool>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (n, x, y) in [(tt, true, true), (tf, true, false), (ft, false, true), (ff, false, false)] {
            a.extend(std::iter::repeat_n(x, n));
            b.extend(std::iter::repeat_n(y, n));
        }
        (a, b)
    }

    #[test]
    fn kappa_examples() {
        let (a, b) = labels(4, 1, 1, 4);
        assert_eq!(cohen_kappa(&a, &b).unwrap(), 0.6);
        let (a, _) = labels(3, 0, 0, 2);
        assert_eq!(cohen_kappa(&a, &a).unwrap(), 1.0);
        assert_eq!(cohen_kappa(&[true, true], &[true, true]), Err(AnnotationError::DegenerateMarginals));
        assert_eq!(cohen_kappa(&[true], &[true, false]), Err(AnnotationError::LengthMismatch(1, 2)));
        assert_eq!(cohen_kappa(&[], &[]), Err(AnnotationError::EmptyLabels));
        // one annotator constant, the other not: p_e < 1, kappa 0
        assert_eq!(cohen_kappa(&[true, true], &[true, false]).unwrap(), 0.0);
    }

    #[test]
    fn record_invariant() {
        let mut r = AnnotationRecord::new("e1", "a1", false, true);
        assert_eq!(r.validate(), Err(AnnotationError::InvariantViolation("e1".into())));
        r.relevant = true;
        assert!(r.validate().is_ok());
        r.annotator_id = " ".into();
        assert_eq!(r.validate(), Err(AnnotationError::EmptyAnnotator));
    }

    #[test]
    fn summary_percentages() {
        let s = RelevanceSummary {
            non_relevant: 3585,
            only_relevant: 528,
            relevant_and_characterizing: 1487,
            total_relevant: 2015,
            disagreements: 0,
        };
        assert_eq!(s.pct_total_relevant().unwrap().percent_fixed(2), "35.98");
        assert_eq!(s.pct_characterizing_given_relevant().unwrap().percent_fixed(1), "73.8");
        assert_eq!(RelevanceSummary::default().pct_total_relevant(), None);
    }

    #[test]
    fn group_percentages() {
        let items = [
            Some(Category::RelevantAndCharacterizing),
            Some(Category::OnlyRelevant),
            Some(Category::NonRelevant),
            Some(Category::NonRelevant),
        ];
        let rows = grouped_summaries(items.into_iter().map(|c| ("g".to_string(), c)));
        let r = &rows[0];
        assert_eq!(r.pct_relevant_and_characterizing().unwrap().percent_fixed(2), "25.00");
        assert_eq!(r.pct_relevant().unwrap().percent_fixed(2), "50.00");
        assert_eq!(r.pct_characterizing_given_relevant().unwrap().percent_fixed(2), "50.00");
    }

    proptest::proptest! {
        #[test]
        fn kappa_is_symmetric_and_bounded(pairs in proptest::collection::vec((proptest::bool::ANY, proptest::bool::ANY), 1..60)) {
            let a: Vec<bool> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            match (cohen_kappa(&a, &b), cohen_kappa(&b, &a)) {
                (Ok(x), Ok(y)) => {
                    proptest::prop_assert_eq!(x, y);
                    proptest::prop_assert!((-1.0..=1.0).contains(&x));
                }
                (Err(x), Err(y)) => proptest::prop_assert_eq!(x, y),
                other => proptest::prop_assert!(false, "{other:?}"),
            }
        }
    }
}
