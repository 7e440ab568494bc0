//! Evaluation tables and their CSV and Markdown renderings.
//!
//! A [`Table`] is built once from computed metrics and rendered to both
//! formats from the same cells, so every number matches across formats.
//! [`emit`] writes `{root}/{run_id}/{table}.csv`, `report.md` and
//! `manifest.txt`.

mod build;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratio::fixed;
use crate::Ratio;

pub use build::{
    build_bundle, build_prompt_performance, BuildOptions, ClusterSummary, EvalItem, Evaluation, FailCount,
    PerformanceInputs, PrefixDistances, Provenance, Role, PERFORMANCE_ROWS,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown table {0}")]
    UnknownTable(String),
}

/// Table names in emission order.
pub const TABLE_ORDER: [&str; 10] = [
    "fail_counts",
    "sentiment_by_prompt",
    "sentiment_by_entity_source",
    "adjective_presence",
    "relevance_summary",
    "per_prompt_relevance",
    "agreement",
    "prompt_performance",
    "cluster_crosstab",
    "k_selection_curves",
];

/// Text of an absent value in both formats.
pub const ABSENT: &str = "NA";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Text(String),
    Int(u64),
    /// Rounded rendering plus the unrounded value.
    Num { shown: String, full: f64 },
    Absent,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn num(value: f64, decimals: u32) -> Self {
        Cell::Num {
            shown: fixed(value, decimals),
            full: value,
        }
    }

    pub fn pct(ratio: Option<Ratio>, decimals: u32) -> Self {
        match ratio {
            Some(r) => Cell::Num {
                shown: r.percent_fixed(decimals),
                full: r.percent(),
            },
            None => Cell::Absent,
        }
    }

    pub fn opt_num(value: Option<f64>, decimals: u32) -> Self {
        value.map_or(Cell::Absent, |v| Cell::num(v, decimals))
    }

    pub fn shown(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(n) => n.to_string(),
            Cell::Num { shown, .. } => shown.clone(),
            Cell::Absent => ABSENT.to_string(),
        }
    }

    fn full(&self) -> Option<String> {
        match self {
            Cell::Num { full, .. } => Some(format!("{full:?}")),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub title: String,
    /// Which backends, lexicons and settings produced the numbers.
    pub provenance: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, title: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            title: title.to_string(),
            provenance: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// The row whose first cell shows `key`.
    pub fn row(&self, key: &str) -> Option<&[Cell]> {
        self.rows.iter().find(|r| r[0].shown() == key).map(Vec::as_slice)
    }

    /// CSV text. With `extra_precision`, every column holding numbers gets
    /// a `{column}_full` companion with the unrounded value.
    pub fn to_csv(&self, extra_precision: bool) -> String {
        let numeric: Vec<bool> = (0..self.columns.len())
            .map(|i| extra_precision && self.rows.iter().any(|r| matches!(r[i], Cell::Num { .. })))
            .collect();
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let mut header = Vec::new();
        for (c, n) in self.columns.iter().zip(&numeric) {
            header.push(c.clone());
            if *n {
                header.push(format!("{c}_full"));
            }
        }
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut out = Vec::new();
            for (cell, n) in row.iter().zip(&numeric) {
                out.push(cell.shown());
                if *n {
                    out.push(cell.full().unwrap_or_else(|| ABSENT.to_string()));
                }
            }
            w.write_record(&out).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
    }

    pub fn to_markdown(&self) -> String {
        let esc = |s: &str| s.replace('|', "\\|").replace('\n', " ");
        let mut out = format!("## {}\n\n", self.title);
        if !self.provenance.is_empty() {
            let _ = writeln!(out, "Source: {}\n", self.provenance.join("; "));
        }
        let _ = writeln!(out, "| {} |", self.columns.iter().map(|c| esc(c)).collect::<Vec<_>>().join(" | "));
        let _ = writeln!(out, "|{}", " --- |".repeat(self.columns.len()));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| esc(&c.shown())).collect();
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
        out
    }
}

/// Every table of one run plus the manifest entries tying them to their
/// inputs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportBundle {
    pub run_id: String,
    pub tables: Vec<Table>,
    pub manifest: BTreeMap<String, String>,
    /// Tables that could not be built and why.
    pub skipped: BTreeMap<String, String>,
}

impl ReportBundle {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Puts tables in [`TABLE_ORDER`]; unknown names go last by name.
    pub fn sort(&mut self) {
        self.tables.sort_by_key(|t| {
            (
                TABLE_ORDER.iter().position(|n| *n == t.name).unwrap_or(TABLE_ORDER.len()),
                t.name.clone(),
            )
        });
    }

    pub fn manifest_text(&self) -> String {
        let mut out = format!("run_id={}\n", self.run_id);
        for (k, v) in &self.manifest {
            let _ = writeln!(out, "{k}={v}");
        }
        let names: Vec<&str> = self.tables.iter().map(|t| t.name.as_str()).collect();
        let _ = writeln!(out, "tables={}", names.join(","));
        for (k, why) in &self.skipped {
            let _ = writeln!(out, "skipped.{k}={why}");
        }
        out
    }

    pub fn markdown(&self) -> String {
        let mut out = format!("# Report {}\n", self.run_id);
        for t in &self.tables {
            out.push('\n');
            out.push_str(&t.to_markdown());
        }
        if !self.skipped.is_empty() {
            out.push_str("\n## Skipped tables\n\n");
            for (k, why) in &self.skipped {
                let _ = writeln!(out, "- {k}: {why}");
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmitOptions {
    pub csv: bool,
    pub markdown: bool,
    pub extra_precision: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        Self {
            csv: true,
            markdown: true,
            extra_precision: false,
        }
    }
}

/// Writes the bundle under `{root}/{run_id}/`, replacing earlier output of
/// the same run. Returns the files written. With no tables only
/// `manifest.txt` is written.
pub fn emit(bundle: &ReportBundle, root: &Path, options: EmitOptions) -> Result<Vec<PathBuf>, ReportError> {
    let dir = root.join(&bundle.run_id);
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportError::Io { path, source }
    };
    if dir.exists() {
        for entry in std::fs::read_dir(&dir).map_err(io(&dir))? {
            let path = entry.map_err(io(&dir))?.path();
            let ours = path.extension().is_some_and(|e| e == "csv")
                || path.file_name().is_some_and(|n| n == "report.md" || n == "manifest.txt");
            if ours && path.is_file() {
                std::fs::remove_file(&path).map_err(io(&path))?;
            }
        }
    }
    std::fs::create_dir_all(&dir).map_err(io(&dir))?;
    let mut written = Vec::new();
    let mut write = |name: String, text: String| -> Result<(), ReportError> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(io(&path))?;
        written.push(path);
        Ok(())
    };
    if !bundle.tables.is_empty() {
        if options.csv {
            for t in &bundle.tables {
                write(format!("{}.csv", t.name), t.to_csv(options.extra_precision))?;
            }
        }
        if options.markdown {
            write("report.md".into(), bundle.markdown())?;
        }
    }
    write("manifest.txt".into(), bundle.manifest_text())?;
    Ok(written)
}
