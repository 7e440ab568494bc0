use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CleanTweet, CorpusError, RawTweet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleDoc {
    pub id: String,
    pub media_house: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

/// A record that could not be ingested.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedRecord {
    pub path: String,
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ArticleIngest {
    pub docs: Vec<ArticleDoc>,
    pub skipped: Vec<SkippedRecord>,
}

impl ArticleIngest {
    pub fn skip_count(&self) -> usize {
        self.skipped.len()
    }
}

#[derive(Debug, Clone, Default)]
pub struct TweetIngest {
    pub tweets: Vec<RawTweet>,
    pub skipped: Vec<SkippedRecord>,
}

#[derive(Deserialize)]
struct ArticleRecord {
    id: String,
    #[serde(default)]
    media_house: Option<String>,
    #[serde(default)]
    url: Option<String>,
    text: String,
}

fn unreadable(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Unreadable {
        path: path.display().to_string(),
        source,
    }
}

fn list_files(path: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let meta = fs::metadata(path).map_err(|e| unreadable(path, e))?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| unreadable(path, e))? {
        let entry = entry.map_err(|e| unreadable(path, e))?;
        if entry.file_type().map_err(|e| unreadable(path, e))?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Splits raw bytes into 1-based `(line, text)` pairs, reporting lines that
/// are not valid UTF-8 as skips.
fn utf8_lines<'a>(
    bytes: &'a [u8],
    path: &Path,
    skipped: &mut Vec<SkippedRecord>,
) -> Vec<(usize, &'a str)> {
    let mut out = Vec::new();
    for (i, line) in bytes.split(|b| *b == b'\n').enumerate() {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        match std::str::from_utf8(line) {
            Ok(s) => out.push((i + 1, s)),
            Err(_) => skipped.push(SkippedRecord {
                path: path.display().to_string(),
                line: i + 1,
                reason: "invalid UTF-8".into(),
            }),
        }
    }
    out
}

fn is_record_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("ndjson")
    )
}

/// Reads articles for one media house from a file or a directory.
///
/// A `.jsonl` file holds one `{id, media_house, url, text}` record per line;
/// any other file is a single plain-text article whose id is the file stem.
/// Directory entries are read in filename order. Malformed records are
/// skipped and reported with their file and line.
pub fn ingest_articles(path: &Path, media_house: &str) -> Result<ArticleIngest, CorpusError> {
    let mut ingest = ArticleIngest::default();
    for file in list_files(path)? {
        let bytes = fs::read(&file).map_err(|e| unreadable(&file, e))?;
        let skip = |line: usize, reason: &str| SkippedRecord {
            path: file.display().to_string(),
            line,
            reason: reason.to_string(),
        };
        if is_record_file(&file) {
            for (line, text) in utf8_lines(&bytes, &file, &mut ingest.skipped) {
                if text.trim().is_empty() {
                    continue;
                }
                let record: ArticleRecord = match serde_json::from_str(text) {
                    Ok(r) => r,
                    Err(e) => {
                        ingest.skipped.push(skip(line, &format!("bad record: {e}")));
                        continue;
                    }
                };
                if record.media_house.as_deref().is_some_and(|h| h != media_house) {
                    ingest.skipped.push(skip(line, "media_house does not match"));
                    continue;
                }
                if record.text.trim().is_empty() {
                    ingest.skipped.push(skip(line, "empty text"));
                    continue;
                }
                ingest.docs.push(ArticleDoc {
                    id: record.id,
                    media_house: media_house.to_string(),
                    text: record.text,
                    url: record.url,
                });
            }
        } else {
            match String::from_utf8(bytes) {
                Ok(text) if text.trim().is_empty() => ingest.skipped.push(skip(1, "empty text")),
                Ok(text) => ingest.docs.push(ArticleDoc {
                    id: file
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default(),
                    media_house: media_house.to_string(),
                    text,
                    url: None,
                }),
                Err(e) => {
                    let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
                    let line = 1 + valid.iter().filter(|b| **b == b'\n').count();
                    ingest.skipped.push(skip(line, "invalid UTF-8"));
                }
            }
        }
    }
    Ok(ingest)
}

/// Reads line-delimited `{id, text, corpus_tag}` tweet records.
/// Duplicate ids within the file are skipped.
pub fn read_tweets(path: &Path) -> Result<TweetIngest, CorpusError> {
    let bytes = fs::read(path).map_err(|e| unreadable(path, e))?;
    let mut ingest = TweetIngest::default();
    let mut seen = HashSet::new();
    for (line, text) in utf8_lines(&bytes, path, &mut ingest.skipped) {
        if text.trim().is_empty() {
            continue;
        }
        let skip = |reason: String| SkippedRecord {
            path: path.display().to_string(),
            line,
            reason,
        };
        match serde_json::from_str::<RawTweet>(text) {
            Ok(t) if !seen.insert(t.id.clone()) => {
                ingest.skipped.push(skip(format!("duplicate id {}", t.id)))
            }
            Ok(t) => ingest.tweets.push(t),
            Err(e) => ingest.skipped.push(skip(format!("bad record: {e}"))),
        }
    }
    Ok(ingest)
}

pub fn write_clean_tweets(path: &Path, tweets: &[CleanTweet]) -> Result<(), CorpusError> {
    let unwritable = |source| CorpusError::Unwritable {
        path: path.display().to_string(),
        source,
    };
    let mut out = Vec::new();
    for t in tweets {
        serde_json::to_writer(&mut out, t).expect("tweet serializes");
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(unwritable)?;
    f.write_all(&out).map_err(unwritable)
}

pub fn read_clean_tweets(path: &Path) -> Result<Vec<CleanTweet>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| unreadable(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CorpusError::Malformed {
                path: path.display().to_string(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Article count and total size per media house.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HouseSummary {
    pub media_house: String,
    pub articles: usize,
    pub bytes: usize,
}

pub fn articles_summary(docs: &[ArticleDoc]) -> Vec<HouseSummary> {
    let mut by_house: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for d in docs {
        let e = by_house.entry(&d.media_house).or_default();
        e.0 += 1;
        e.1 += d.text.len();
    }
    by_house
        .into_iter()
        .map(|(h, (articles, bytes))| HouseSummary {
            media_house: h.to_string(),
            articles,
            bytes,
        })
        .collect()
}

/// Most frequent capitalized tokens, as a starting point for curating an
/// entity list by hand. Sentence-initial tokens are ignored.
pub fn entity_candidates<'a>(
    texts: impl IntoIterator<Item = &'a str>,
    top_n: usize,
) -> Vec<(String, usize)> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for text in texts {
        let mut sentence_start = true;
        for raw in text.split_whitespace() {
            let token = raw.trim_matches(|c: char| !c.is_alphanumeric());
            let capitalized = token.chars().next().is_some_and(char::is_uppercase)
                && token.chars().skip(1).any(char::is_lowercase);
            if capitalized && !sentence_start {
                *counts.entry(token.to_string()).or_default() += 1;
            }
            sentence_start = raw.ends_with(['.', '!', '?']);
        }
    }
    let mut ranked: Vec<_> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directory_in_filename_order() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.txt"), "second article").unwrap();
        fs::write(dir.path().join("a.txt"), "first article").unwrap();
        let got = ingest_articles(dir.path(), "M1").unwrap();
        let ids: Vec<_> = got.docs.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(got.skip_count(), 0);
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let got = ingest_articles(dir.path(), "M1").unwrap();
        assert!(got.docs.is_empty());
        assert_eq!(got.skip_count(), 0);
    }

    #[test]
    fn non_utf8_record_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = Vec::new();
        bytes.extend_from_slice(br#"{"id":"1","media_house":"M1","text":"one"}"#);
        bytes.push(b'\n');
        bytes.extend_from_slice(b"{\"id\":\"2\",\"text\":\"bad \xff\xfe\"}\n");
        bytes.extend_from_slice(br#"{"id":"3","url":"http://x","text":"three"}"#);
        bytes.push(b'\n');
        let path = dir.path().join("m1.jsonl");
        fs::write(&path, bytes).unwrap();
        let got = ingest_articles(&path, "M1").unwrap();
        assert_eq!(got.docs.len(), 2);
        assert_eq!(got.skip_count(), 1);
        assert_eq!(got.skipped[0].line, 2);
        assert_eq!(got.docs[1].url.as_deref(), Some("http://x"));
    }

    #[test]
    fn mismatched_house_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        fs::write(&path, "{\"id\":\"1\",\"media_house\":\"M2\",\"text\":\"t\"}\n").unwrap();
        let got = ingest_articles(&path, "M1").unwrap();
        assert!(got.docs.is_empty());
        assert_eq!(got.skipped[0].reason, "media_house does not match");
    }

    #[test]
    fn missing_path_is_an_error() {
        let err = ingest_articles(Path::new("/definitely/not/here"), "M1").unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here"));
    }

    #[test]
    fn tweets_with_duplicate_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        fs::write(
            &path,
            "{\"id\":\"1\",\"text\":\"a\",\"corpus_tag\":\"gp\"}\n{\"id\":\"1\",\"text\":\"b\",\"corpus_tag\":\"gp\"}\nnot json\n",
        )
        .unwrap();
        let got = read_tweets(&path).unwrap();
        assert_eq!(got.tweets.len(), 1);
        assert_eq!(got.skipped.len(), 2);
    }

    #[test]
    fn summary_and_candidates() {
        let docs = vec![
            ArticleDoc { id: "1".into(), media_house: "M2".into(), text: "abc".into(), url: None },
            ArticleDoc { id: "2".into(), media_house: "M1".into(), text: "de".into(), url: None },
            ArticleDoc { id: "3".into(), media_house: "M2".into(), text: "f".into(), url: None },
        ];
        let s = articles_summary(&docs);
        assert_eq!(s[0], HouseSummary { media_house: "M1".into(), articles: 1, bytes: 2 });
        assert_eq!(s[1], HouseSummary { media_house: "M2".into(), articles: 2, bytes: 4 });

        let c = entity_candidates(["Today Jane met Bob. Then Jane left, said Jane."], 2);
        assert_eq!(c, vec![("Jane".to_string(), 3), ("Bob".to_string(), 1)]);
    }
}
