use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AdjectiveSet, MetricsError, Polarity};
use crate::Ratio;

fn check_groups<T>(groups: &[(String, Vec<T>)]) -> Result<(), MetricsError> {
    if groups.is_empty() {
        return Err(MetricsError::NoGroups);
    }
    match groups.iter().find(|(_, items)| items.is_empty()) {
        Some((name, _)) => Err(MetricsError::EmptyGroup(name.clone())),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresenceRow {
    pub group: String,
    pub absent: u64,
    pub present: u64,
}

impl PresenceRow {
    pub fn total(&self) -> u64 {
        self.absent + self.present
    }

    pub fn pct_present(&self) -> Ratio {
        Ratio::new(self.present, self.total()).expect("rows are non-empty")
    }
}

/// Per group: how many texts have at least one adjective.
pub fn adjective_presence_table(groups: &[(String, Vec<AdjectiveSet>)]) -> Result<Vec<PresenceRow>, MetricsError> {
    check_groups(groups)?;
    Ok(groups
        .iter()
        .map(|(group, sets)| {
            let present = sets.iter().filter(|s| !s.is_empty()).count() as u64;
            PresenceRow {
                group: group.clone(),
                absent: sets.len() as u64 - present,
                present,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentRow {
    pub group: String,
    pub neg: u64,
    pub pos: u64,
}

impl SentimentRow {
    pub fn total(&self) -> u64 {
        self.neg + self.pos
    }

    pub fn pct_positive(&self) -> Ratio {
        Ratio::new(self.pos, self.total()).expect("rows are non-empty")
    }

    pub fn pct_negative(&self) -> Ratio {
        Ratio::new(self.neg, self.total()).expect("rows are non-empty")
    }
}

/// Per group: negative and positive counts.
pub fn sentiment_ratio_table(groups: &[(String, Vec<Polarity>)]) -> Result<Vec<SentimentRow>, MetricsError> {
    check_groups(groups)?;
    Ok(groups
        .iter()
        .map(|(group, labels)| {
            let pos = labels.iter().filter(|p| **p == Polarity::Positive).count() as u64;
            SentimentRow {
                group: group.clone(),
                neg: labels.len() as u64 - pos,
                pos,
            }
        })
        .collect())
}

/// Positive share per (entity, source) cell. Rows and columns keep
/// first-appearance order; cells without data are absent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentGrid {
    pub entities: Vec<String>,
    pub sources: Vec<String>,
    /// `(positive, total)` per `(entity, source)`.
    pub cells: BTreeMap<(String, String), (u64, u64)>,
}

impl SentimentGrid {
    pub fn cell(&self, entity: &str, source: &str) -> Option<Ratio> {
        self.cells
            .get(&(entity.to_string(), source.to_string()))
            .and_then(|(pos, total)| Ratio::new(*pos, *total))
    }
}

pub fn entity_source_sentiment_table<E, S>(items: impl IntoIterator<Item = (E, S, Polarity)>) -> SentimentGrid
where
    E: Into<String>,
    S: Into<String>,
{
    let mut grid = SentimentGrid::default();
    for (entity, source, polarity) in items {
        let (entity, source) = (entity.into(), source.into());
        if !grid.entities.contains(&entity) {
            grid.entities.push(entity.clone());
        }
        if !grid.sources.contains(&source) {
            grid.sources.push(source.clone());
        }
        let cell = grid.cells.entry((entity, source)).or_default();
        cell.0 += u64::from(polarity == Polarity::Positive);
        cell.1 += 1;
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlpmetrics::AdjTag;
    use Polarity::{Negative as N, Positive as P};

    fn labels(neg: usize, pos: usize) -> Vec<Polarity> {
        let mut v = vec![N; neg];
        v.extend(vec![P; pos]);
        v
    }

    #[test]
    fn sentiment_percentages() {
        let rows = sentiment_ratio_table(&[
            ("is a very".into(), labels(34, 666)),
            ("lacks".into(), labels(375, 325)),
            ("x".into(), labels(0, 10)),
        ])
        .unwrap();
        let pct: Vec<_> = rows.iter().map(|r| r.pct_positive().percent_fixed(2)).collect();
        assert_eq!(pct, ["95.14", "46.43", "100.00"]);
        for r in &rows {
            assert_eq!(r.pct_positive().num + r.pct_negative().num, r.total());
        }
    }

    #[test]
    fn presence_counts() {
        let with = AdjectiveSet {
            tokens: vec!["kind".into()],
            tags: vec![AdjTag::JJ],
        };
        let rows = adjective_presence_table(&[(
            "g".into(),
            vec![with.clone(), AdjectiveSet::default(), with.clone(), with],
        )])
        .unwrap();
        assert_eq!(rows[0], PresenceRow { group: "g".into(), absent: 1, present: 3 });
        assert_eq!(
            adjective_presence_table(&[("e".into(), vec![])]),
            Err(MetricsError::EmptyGroup("e".into()))
        );
        assert_eq!(adjective_presence_table(&[]), Err(MetricsError::NoGroups));
    }

    #[test]
    fn entity_grid() {
        let mut items = Vec::new();
        items.extend((0..37).map(|_| ("P1", "M2", P)));
        items.extend((0..3).map(|_| ("P1", "M2", N)));
        items.extend((0..31).map(|_| ("Entity 1", "EWS", P)));
        items.push(("Entity 1", "EWS", N));
        items.extend((0..8).map(|_| ("P2", "M1", P)));
        let grid = entity_source_sentiment_table(items);
        assert_eq!(grid.cell("P1", "M2").unwrap().percent_fixed(1), "92.5");
        assert_eq!(grid.cell("Entity 1", "EWS").unwrap().percent_fixed(2), "96.88");
        assert_eq!(grid.cell("P2", "M1").unwrap().percent_fixed(1), "100.0");
        assert_eq!(grid.cell("P1", "M1"), None);
        assert_eq!(grid.entities, ["P1", "Entity 1", "P2"]);
    }
}
