use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnnotationError, AnnotationRecord, AnnotationStore};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    entailment_id: String,
    annotator_id: String,
    relevant: String,
    characterizing: String,
    #[serde(default)]
    timestamp: String,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Some(true),
        "false" | "0" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// Reads `entailment_id, annotator_id, relevant, characterizing,
/// timestamp` rows. Booleans accept true/false, 1/0 and yes/no.
pub fn read_csv(path: &Path) -> Result<Vec<AnnotationRecord>, AnnotationError> {
    let malformed = |line: usize, reason: String| AnnotationError::Malformed {
        path: path.display().to_string(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| AnnotationError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row.map_err(|e| malformed(line, e.to_string()))?;
        let flag = |s: &str, name: &str| parse_bool(s).ok_or_else(|| malformed(line, format!("{name}: {s:?} is not a boolean")));
        out.push(AnnotationRecord {
            relevant: flag(&row.relevant, "relevant")?,
            characterizing: flag(&row.characterizing, "characterizing")?,
            entailment_id: row.entailment_id,
            annotator_id: row.annotator_id,
            timestamp: row.timestamp,
            correct: None,
        });
    }
    Ok(out)
}

/// Submits every row of a CSV file in order. Stops at the first rejected
/// row and reports its line. Returns the number of rows submitted.
pub fn import_csv(store: &AnnotationStore, path: &Path) -> Result<usize, AnnotationError> {
    let records = read_csv(path)?;
    for (i, r) in records.iter().enumerate() {
        store.submit(r.clone()).map_err(|e| AnnotationError::Malformed {
            path: path.display().to_string(),
            line: i + 2,
            reason: e.to_string(),
        })?;
    }
    Ok(records.len())
}

/// Writes the current records, one row each.
pub fn export_csv(store: &AnnotationStore, path: &Path) -> Result<usize, AnnotationError> {
    let io = |e: &dyn std::fmt::Display| AnnotationError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    };
    let mut writer = csv::Writer::from_path(path).map_err(|e| io(&e))?;
    let records = store.records();
    for r in &records {
        writer
            .serialize(Row {
                entailment_id: r.entailment_id.clone(),
                annotator_id: r.annotator_id.clone(),
                relevant: r.relevant.to_string(),
                characterizing: r.characterizing.to_string(),
                timestamp: r.timestamp.clone(),
            })
            .map_err(|e| io(&e))?;
    }
    writer.flush().map_err(|e| io(&e))?;
    Ok(records.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn import_export_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        std::fs::write(
            &path,
            "entailment_id,annotator_id,relevant,characterizing,timestamp\n\
             e1,a,true,true,2024-01-01T00:00:00Z\n\
             e1,b,1,0,2024-01-01T00:00:01Z\n\
             e2,a,no,no,\n",
        )
        .unwrap();
        let store = AnnotationStore::permissive();
        assert_eq!(import_csv(&store, &path).unwrap(), 3);
        let out = dir.path().join("out.csv");
        export_csv(&store, &out).unwrap();
        let again = AnnotationStore::permissive();
        import_csv(&again, &out).unwrap();
        assert_eq!(again.records(), store.records());
    }

    #[test]
    fn bad_rows_name_their_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        std::fs::write(
            &path,
            "entailment_id,annotator_id,relevant,characterizing,timestamp\ne1,a,true,maybe,t\n",
        )
        .unwrap();
        assert!(matches!(read_csv(&path), Err(AnnotationError::Malformed { line: 2, .. })));
        std::fs::write(
            &path,
            "entailment_id,annotator_id,relevant,characterizing,timestamp\ne1,a,true,true,t\ne1,b,false,true,t\n",
        )
        .unwrap();
        let store = AnnotationStore::permissive();
        assert!(matches!(import_csv(&store, &path), Err(AnnotationError::Malformed { line: 3, .. })));
        assert_eq!(store.len(), 1);
    }
}
