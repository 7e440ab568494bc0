//! Turning evaluation results and annotations into report tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Cell, ReportBundle, Table};
use crate::annotation::{AnnotationStore, Category, GroupRelevance};
use crate::clusterlab::KSelection;
use crate::nlpmetrics::{
    entity_source_sentiment_table, sentiment_ratio_table, Polarity, PresenceRow, SentimentRow,
};
use crate::promptkit::PrefixPrompt;
use crate::Ratio;

/// Whether a generation backend is a domain-adapted model or the
/// reference model that centroid distances are measured against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[default]
    Adapted,
    Reference,
}

/// Backend and lexicon tags that produced the evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sentiment: String,
    pub adjectives: String,
    pub embedding: Option<String>,
    pub metric: String,
    /// `(model_tag, role)` per generation backend.
    pub generation: Vec<(String, Role)>,
}

/// Metrics of one valid entailment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    pub id: String,
    pub model_tag: String,
    pub role: Role,
    pub entity: String,
    pub prefix: String,
    pub text: String,
    pub polarity: Polarity,
    pub adjectives: Vec<String>,
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailCount {
    pub model_tag: String,
    pub prefix: String,
    pub fail_count: u64,
    pub attempts: u64,
}

/// Centroid distances between adapted and reference outputs for one
/// prefix-prompt. `None` when the distance could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixDistances {
    pub prefix: String,
    pub adjective: Option<f64>,
    pub sentence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub distortion: f64,
    pub silhouette: Option<f64>,
    pub calinski_harabasz: Option<f64>,
}

/// Everything the evaluate step computes, stored as `evaluation.json` and
/// turned into tables by [`build_bundle`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub run_id: String,
    pub provenance: Provenance,
    /// Prefix texts in canonical listing order.
    pub prefixes: Vec<String>,
    pub fail_counts: Vec<FailCount>,
    pub items: Vec<EvalItem>,
    pub distances: Vec<PrefixDistances>,
    pub k_selection: Option<KSelection>,
    pub clustering: Option<ClusterSummary>,
    /// Steps that were skipped, with the reason.
    pub skipped: BTreeMap<String, String>,
}

impl Evaluation {
    /// Prefix texts present in the items, in canonical order, with
    /// non-canonical prefixes after them by first appearance.
    pub fn prefix_order(items: &[EvalItem]) -> Vec<String> {
        let mut known: Vec<(usize, String)> = Vec::new();
        for item in items {
            if !known.iter().any(|(_, p)| *p == item.prefix) {
                let rank = PrefixPrompt::by_text(&item.prefix).map_or(usize::MAX, |p| p.order());
                known.push((rank, item.prefix.clone()));
            }
        }
        known.sort_by_key(|(rank, _)| *rank);
        known.into_iter().map(|(_, p)| p).collect()
    }

    fn adapted(&self) -> impl Iterator<Item = &EvalItem> {
        self.items.iter().filter(|i| i.role == Role::Adapted)
    }

    fn tags(&self, role: Role) -> Vec<String> {
        self.provenance
            .generation
            .iter()
            .filter(|(_, r)| *r == role)
            .map(|(t, _)| t.clone())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildOptions {
    /// Decimals of the entity by source percentages (1 or 2).
    pub entity_decimals: u32,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { entity_decimals: 1 }
    }
}

/// Inputs of [`build_prompt_performance`]. A `None` family makes its rows
/// absent.
#[derive(Debug, Clone, Default)]
pub struct PerformanceInputs<'a> {
    pub prefixes: &'a [String],
    pub distances: Option<&'a [PrefixDistances]>,
    pub adjectives: Option<&'a [PresenceRow]>,
    pub sentiment: Option<&'a [SentimentRow]>,
    pub relevance: Option<&'a [GroupRelevance]>,
}

pub const PERFORMANCE_ROWS: [&str; 6] = [
    "adjectives centroid distance",
    "sentence centroid distance",
    "% adjectives",
    "% positive sentiment",
    "% negative sentiment",
    "% characterizing output",
];

/// Six measure rows by one column per prefix-prompt, two decimals.
pub fn build_prompt_performance(inputs: &PerformanceInputs<'_>) -> Table {
    let mut columns = vec!["measure"];
    columns.extend(inputs.prefixes.iter().map(String::as_str));
    let mut t = Table::new("prompt_performance", "Effect of prefix-prompts", &columns);
    let row = |name: &str, cell: &dyn Fn(&str) -> Cell| {
        let mut r = vec![Cell::text(name)];
        r.extend(inputs.prefixes.iter().map(|p| cell(p)));
        r
    };
    let distance = |pick: fn(&PrefixDistances) -> Option<f64>| {
        move |p: &str| {
            let d = inputs.distances.and_then(|ds| ds.iter().find(|d| d.prefix == p));
            Cell::opt_num(d.and_then(pick), 2)
        }
    };
    let sentiment = |pick: fn(&SentimentRow) -> Ratio| {
        move |p: &str| Cell::pct(inputs.sentiment.and_then(|s| s.iter().find(|r| r.group == p)).map(pick), 2)
    };
    t.push(row(PERFORMANCE_ROWS[0], &distance(|d| d.adjective)));
    t.push(row(PERFORMANCE_ROWS[1], &distance(|d| d.sentence)));
    t.push(row(PERFORMANCE_ROWS[2], &|p| {
        Cell::pct(
            inputs.adjectives.and_then(|a| a.iter().find(|r| r.group == p)).map(PresenceRow::pct_present),
            2,
        )
    }));
    t.push(row(PERFORMANCE_ROWS[3], &sentiment(SentimentRow::pct_positive)));
    t.push(row(PERFORMANCE_ROWS[4], &sentiment(SentimentRow::pct_negative)));
    t.push(row(PERFORMANCE_ROWS[5], &|p| {
        Cell::pct(
            inputs
                .relevance
                .and_then(|r| r.iter().find(|g| g.group == p))
                .and_then(GroupRelevance::pct_relevant_and_characterizing),
            2,
        )
    }));
    t
}

fn group_in_order<T>(order: &[String], items: impl IntoIterator<Item = (String, T)>) -> Vec<(String, Vec<T>)> {
    let mut map: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for (k, v) in items {
        map.entry(k).or_default().push(v);
    }
    order.iter().filter_map(|k| map.remove(k).map(|v| (k.clone(), v))).collect()
}

fn category_str(c: Category) -> &'static str {
    match c {
        Category::NonRelevant => "non_relevant",
        Category::OnlyRelevant => "only_relevant",
        Category::RelevantAndCharacterizing => "relevant_and_characterizing",
    }
}

fn annotation_tag(store: &AnnotationStore) -> String {
    format!(
        "annotations: {} annotators, consensus of at least {}",
        store.annotators().len(),
        store.min_annotators
    )
}

/// Builds every table the evaluation and annotations support. Tables
/// that cannot be built are listed in [`ReportBundle::skipped`].
pub fn build_bundle(eval: &Evaluation, annotations: Option<&AnnotationStore>, options: BuildOptions) -> ReportBundle {
    let mut b = ReportBundle {
        run_id: eval.run_id.clone(),
        ..Default::default()
    };
    let p = &eval.provenance;
    let prefixes = if eval.prefixes.is_empty() { Evaluation::prefix_order(&eval.items) } else { eval.prefixes.clone() };
    let gen_tags: Vec<String> = p.generation.iter().map(|(t, r)| format!("{t} ({})", role_str(*r))).collect();
    b.manifest.insert("backend.generation".into(), gen_tags.join(","));
    b.manifest.insert("backend.sentiment".into(), p.sentiment.clone());
    b.manifest.insert("backend.adjectives".into(), p.adjectives.clone());
    b.manifest.insert("backend.embedding".into(), p.embedding.clone().unwrap_or_else(|| "none".into()));
    b.manifest.insert("metric".into(), p.metric.clone());
    for (k, why) in &eval.skipped {
        b.manifest.insert(format!("evaluate.skipped.{k}"), why.clone());
    }
    let annotations = annotations.filter(|s| !s.consensus_map().is_empty());
    let skip = |b: &mut ReportBundle, name: &str, why: &str| {
        b.skipped.insert(name.to_string(), why.to_string());
    };

    // fail counts
    if eval.fail_counts.is_empty() {
        skip(&mut b, "fail_counts", "no generation manifests");
    } else {
        let mut tags: Vec<String> = Vec::new();
        for f in &eval.fail_counts {
            if !tags.contains(&f.model_tag) {
                tags.push(f.model_tag.clone());
            }
        }
        let mut fail_prefixes: Vec<String> = prefixes.clone();
        for f in &eval.fail_counts {
            if !fail_prefixes.contains(&f.prefix) {
                fail_prefixes.push(f.prefix.clone());
            }
        }
        let mut cols = vec!["prefix"];
        cols.extend(tags.iter().map(String::as_str));
        cols.push("total");
        let mut t = Table::new("fail_counts", "Failed outputs per prefix-prompt", &cols);
        t.provenance.push(format!("generation: {}", gen_tags.join(", ")));
        for prefix in &fail_prefixes {
            let mut row = vec![Cell::text(prefix)];
            let mut total = 0;
            for tag in &tags {
                let sum: Option<u64> = eval
                    .fail_counts
                    .iter()
                    .filter(|f| &f.prefix == prefix && &f.model_tag == tag)
                    .map(|f| f.fail_count)
                    .reduce(|a, c| a + c);
                total += sum.unwrap_or(0);
                row.push(sum.map_or(Cell::Absent, Cell::Int));
            }
            row.push(Cell::Int(total));
            t.push(row);
        }
        b.tables.push(t);
    }

    let adapted: Vec<&EvalItem> = eval.adapted().collect();
    let sentiment_rows: Option<Vec<SentimentRow>> = {
        let groups = group_in_order(&prefixes, adapted.iter().map(|i| (i.prefix.clone(), i.polarity)));
        sentiment_ratio_table(&groups).ok()
    };
    let presence_rows: Option<Vec<PresenceRow>> = {
        let groups = group_in_order(&prefixes, adapted.iter().map(|i| (i.prefix.clone(), !i.adjectives.is_empty())));
        (!groups.is_empty()).then(|| {
            groups
                .into_iter()
                .map(|(group, flags)| {
                    let present = flags.iter().filter(|f| **f).count() as u64;
                    PresenceRow {
                        group,
                        absent: flags.len() as u64 - present,
                        present,
                    }
                })
                .collect()
        })
    };

    match &sentiment_rows {
        Some(rows) => {
            let mut t = Table::new(
                "sentiment_by_prompt",
                "Sentiment of entailments per prefix-prompt",
                &["prefix", "neg", "pos", "pct_positive", "pct_negative"],
            );
            t.provenance.push(format!("sentiment: {}", p.sentiment));
            for r in rows {
                t.push(vec![
                    Cell::text(&r.group),
                    Cell::Int(r.neg),
                    Cell::Int(r.pos),
                    Cell::pct(Some(r.pct_positive()), 2),
                    Cell::pct(Some(r.pct_negative()), 2),
                ]);
            }
            b.tables.push(t);

            let grid = entity_source_sentiment_table(adapted.iter().map(|i| (i.entity.clone(), i.model_tag.clone(), i.polarity)));
            let mut sources = eval.tags(Role::Adapted);
            sources.retain(|s| grid.sources.contains(s));
            for s in &grid.sources {
                if !sources.contains(s) {
                    sources.push(s.clone());
                }
            }
            let mut cols = vec!["entity"];
            cols.extend(sources.iter().map(String::as_str));
            let mut t = Table::new(
                "sentiment_by_entity_source",
                "Positive sentiment percentage per entity and source",
                &cols,
            );
            t.provenance.push(format!("sentiment: {}", p.sentiment));
            for e in &grid.entities {
                let mut row = vec![Cell::text(e)];
                row.extend(sources.iter().map(|s| Cell::pct(grid.cell(e, s), options.entity_decimals)));
                t.push(row);
            }
            b.tables.push(t);
        }
        None => {
            skip(&mut b, "sentiment_by_prompt", "no adapted entailments");
            skip(&mut b, "sentiment_by_entity_source", "no adapted entailments");
        }
    }

    match &presence_rows {
        Some(rows) => {
            let mut t = Table::new(
                "adjective_presence",
                "Adjectives in entailments per prefix-prompt",
                &["prefix", "absent", "present", "pct_present"],
            );
            t.provenance.push(format!("adjectives: {}", p.adjectives));
            for r in rows {
                t.push(vec![
                    Cell::text(&r.group),
                    Cell::Int(r.absent),
                    Cell::Int(r.present),
                    Cell::pct(Some(r.pct_present()), 2),
                ]);
            }
            b.tables.push(t);
        }
        None => skip(&mut b, "adjective_presence", "no adapted entailments"),
    }

    let item_prefix: BTreeMap<&str, &str> = eval.items.iter().map(|i| (i.id.as_str(), i.prefix.as_str())).collect();
    let per_prompt: Option<Vec<GroupRelevance>> = annotations.map(|store| {
        let mut groups = store.per_group_relevance(|id| {
            item_prefix
                .get(id)
                .map(|p| p.to_string())
                .or_else(|| store.task(id).map(|t| t.prefix.clone()))
        });
        let rank = |g: &GroupRelevance| prefixes.iter().position(|p| *p == g.group).unwrap_or(usize::MAX);
        groups.sort_by_key(rank);
        groups
    });

    match annotations {
        Some(store) => {
            let s = store.relevance_summary();
            let mut t = Table::new(
                "relevance_summary",
                "Relevant and characterizing outputs",
                &["category", "count", "pct"],
            );
            t.provenance.push(annotation_tag(store));
            let rows: [(&str, u64, Option<Ratio>); 5] = [
                ("non_relevant", s.non_relevant, s.pct_non_relevant()),
                ("only_relevant", s.only_relevant, s.pct_only_relevant()),
                ("relevant_and_characterizing", s.relevant_and_characterizing, s.pct_relevant_and_characterizing()),
                ("total_relevant", s.total_relevant, s.pct_total_relevant()),
                ("disagreements", s.disagreements, None),
            ];
            for (name, n, pct) in rows {
                t.push(vec![Cell::text(name), Cell::Int(n), Cell::pct(pct, 2)]);
            }
            b.tables.push(t);

            let mut t = Table::new(
                "per_prompt_relevance",
                "Relevant and characterizing outputs per prefix-prompt",
                &["prefix", "consensus", "pct_relevant_and_characterizing", "pct_relevant", "pct_characterizing_of_relevant"],
            );
            t.provenance.push(annotation_tag(store));
            for g in per_prompt.as_deref().unwrap_or_default() {
                t.push(vec![
                    Cell::text(&g.group),
                    Cell::Int(g.summary.consensus_total()),
                    Cell::pct(g.pct_relevant_and_characterizing(), 2),
                    Cell::pct(g.pct_relevant(), 2),
                    Cell::pct(g.pct_characterizing_given_relevant(), 2),
                ]);
            }
            b.tables.push(t);

            let agreement = agreement_table(eval, store);
            if agreement.rows.is_empty() {
                skip(&mut b, "agreement", "no annotator pair overlaps");
            } else {
                b.tables.push(agreement);
            }
        }
        None => {
            for name in ["relevance_summary", "per_prompt_relevance", "agreement"] {
                skip(&mut b, name, "no annotations");
            }
        }
    }

    if prefixes.is_empty() {
        skip(&mut b, "prompt_performance", "no entailments");
    } else {
        let has_distance = |pick: fn(&PrefixDistances) -> Option<f64>| eval.distances.iter().any(|d| pick(d).is_some());
        let distances = (has_distance(|d| d.adjective) || has_distance(|d| d.sentence)).then_some(eval.distances.as_slice());
        let mut t = build_prompt_performance(&PerformanceInputs {
            prefixes: &prefixes,
            distances,
            adjectives: presence_rows.as_deref(),
            sentiment: sentiment_rows.as_deref(),
            relevance: per_prompt.as_deref(),
        });
        t.provenance.push(format!(
            "distances: {} between adapted and reference centroids, embedding {}",
            p.metric,
            p.embedding.as_deref().unwrap_or("none")
        ));
        t.provenance.push(format!("sentiment: {}", p.sentiment));
        t.provenance.push(format!("adjectives: {}", p.adjectives));
        if let Some(store) = annotations {
            t.provenance.push(annotation_tag(store));
        }
        b.tables.push(t);
    }

    match (&eval.clustering, adapted.iter().any(|i| i.cluster.is_some())) {
        (Some(c), true) => b.tables.push(crosstab_table(eval, c, &adapted, annotations)),
        _ => skip(
            &mut b,
            "cluster_crosstab",
            eval.skipped.get("clustering").map_or("no clustering", String::as_str),
        ),
    }
    match &eval.k_selection {
        Some(sel) => {
            let mut t = Table::new(
                "k_selection_curves",
                "Cluster count selection",
                &["k", "distortion", "silhouette", "calinski_harabasz", "chosen"],
            );
            t.provenance.push(format!("embedding: {}", p.embedding.as_deref().unwrap_or("none")));
            for s in &sel.per_k {
                t.push(vec![
                    Cell::Int(s.k as u64),
                    Cell::num(s.distortion, 4),
                    Cell::num(s.silhouette, 4),
                    Cell::num(s.calinski_harabasz, 4),
                    Cell::text(if s.k == sel.chosen_k { "yes" } else { "no" }),
                ]);
            }
            b.tables.push(t);
        }
        None => skip(
            &mut b,
            "k_selection_curves",
            eval.skipped.get("clustering").map_or("no clustering", String::as_str),
        ),
    }
    b.sort();
    b
}

fn role_str(r: Role) -> &'static str {
    match r {
        Role::Adapted => "adapted",
        Role::Reference => "reference",
    }
}

fn agreement_table(eval: &Evaluation, store: &AnnotationStore) -> Table {
    let mut t = Table::new(
        "agreement",
        "Annotator agreement",
        &["group", "annotator_a", "annotator_b", "n", "kappa_relevant", "kappa_characterizing", "pct_characterizing"],
    );
    t.provenance.push(annotation_tag(store));
    let annotators = store.annotators();
    let tag_of: BTreeMap<&str, &str> = eval.items.iter().map(|i| (i.id.as_str(), i.model_tag.as_str())).collect();
    let mut groups: Vec<Option<String>> = eval.provenance.generation.iter().map(|(t, _)| Some(t.clone())).collect();
    groups.push(None);
    for group in &groups {
        for (i, a) in annotators.iter().enumerate() {
            for bnn in &annotators[i + 1..] {
                let keep = |id: &str| match group {
                    Some(g) => tag_of.get(id).copied().or_else(|| store.task(id).map(|t| t.model_tag.as_str())) == Some(g.as_str()),
                    None => true,
                };
                let Ok(r) = store.agreement_where(a, bnn, keep) else {
                    continue;
                };
                t.push(vec![
                    Cell::text(group.as_deref().unwrap_or("all")),
                    Cell::text(a),
                    Cell::text(bnn),
                    Cell::Int(r.n as u64),
                    Cell::opt_num(r.kappa_relevant, 2),
                    Cell::opt_num(r.kappa_characterizing, 2),
                    Cell::pct(r.pct_characterizing, 2),
                ]);
            }
        }
    }
    t
}

fn crosstab_table(
    eval: &Evaluation,
    c: &ClusterSummary,
    adapted: &[&EvalItem],
    annotations: Option<&AnnotationStore>,
) -> Table {
    let mut cols = vec!["cluster", "size", "adjectives_absent", "adjectives_present", "negative", "positive"];
    let consensus = annotations.map(AnnotationStore::consensus_map);
    if consensus.is_some() {
        cols.extend(["non_relevant", "only_relevant", "relevant_and_characterizing", "no_consensus", "unannotated"]);
    }
    let mut t = Table::new("cluster_crosstab", "Cluster analysis of outputs", &cols);
    t.provenance.push(format!(
        "embedding: {}; k-means k={} seed={} restarts={}",
        eval.provenance.embedding.as_deref().unwrap_or("none"),
        c.k,
        c.seed,
        c.restarts
    ));
    t.provenance.push(format!("sentiment: {}", eval.provenance.sentiment));
    t.provenance.push(format!("adjectives: {}", eval.provenance.adjectives));
    if let Some(store) = annotations {
        t.provenance.push(annotation_tag(store));
    }
    let mut counts: Vec<BTreeMap<&str, u64>> = vec![BTreeMap::new(); c.k];
    for item in adapted {
        let Some(k) = item.cluster else { continue };
        let row = &mut counts[k];
        *row.entry("size").or_default() += 1;
        let adj = if item.adjectives.is_empty() { "adjectives_absent" } else { "adjectives_present" };
        *row.entry(adj).or_default() += 1;
        *row.entry(item.polarity.as_str()).or_default() += 1;
        if let Some(map) = &consensus {
            let label = match map.get(&item.id) {
                Some(Some(cat)) => category_str(*cat),
                Some(None) => "no_consensus",
                None => "unannotated",
            };
            *row.entry(label).or_default() += 1;
        }
    }
    for (k, row) in counts.iter().enumerate() {
        let mut cells = vec![Cell::Int(k as u64)];
        cells.extend(cols[1..].iter().map(|c| Cell::Int(row.get(c).copied().unwrap_or(0))));
        t.push(cells);
    }
    t
}
