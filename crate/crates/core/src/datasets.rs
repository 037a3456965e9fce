//! Benchmark corpora as [`Topic`] lists.
//!
//! The canonical interchange form is JSONL, one
//! `{"id", "words", "references"}` object per line. Two adapters read the
//! external distributions:
//!
//! * `bhatia_csv`: one row per topic/label pair with columns
//!   `topic_id, domain, terms, label, avg_rating`; `terms` is space-separated.
//!   Rows rated below 2.0 are dropped, and a topic with no surviving row is
//!   dropped with them.
//! * `newsgroups_tsv`: `label` followed by ten topic words, tab-separated.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Topic, TopicError};

pub const MIN_BHATIA_RATING: f64 = 2.0;
pub const NEWSGROUPS_WORDS: usize = 10;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("duplicate topic id `{0}`")]
    DuplicateTopicId(String),
    #[error("dataset contains no topics")]
    EmptyDataset,
}

fn parse_err(line: u64, message: impl ToString) -> DatasetError {
    DatasetError::Parse { line, message: message.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    TopicsJsonl,
    BhatiaCsv,
    NewsgroupsTsv,
}

impl std::str::FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "topics_jsonl" => Ok(Self::TopicsJsonl),
            "bhatia_csv" => Ok(Self::BhatiaCsv),
            "newsgroups_tsv" => Ok(Self::NewsgroupsTsv),
            other => Err(format!("unknown dataset format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub format: DatasetFormat,
    pub path: PathBuf,
}

impl DatasetSpec {
    pub fn new(name: impl Into<String>, format: DatasetFormat, path: impl Into<PathBuf>) -> Self {
        Self { name: name.into(), format, path: path.into() }
    }
}

pub fn load_topics(spec: &DatasetSpec) -> Result<Vec<Topic>, DatasetError> {
    let text = fs::read_to_string(&spec.path).map_err(|source| DatasetError::Io { path: spec.path.clone(), source })?;
    let topics = match spec.format {
        DatasetFormat::TopicsJsonl => parse_jsonl(&text)?,
        DatasetFormat::BhatiaCsv => parse_bhatia_csv(&text)?,
        DatasetFormat::NewsgroupsTsv => parse_newsgroups_tsv(&text)?,
    };
    log::info!("loaded {} topics from {} ({:?})", topics.len(), spec.path.display(), spec.format);
    Ok(topics)
}

fn check_unique(topics: Vec<Topic>) -> Result<Vec<Topic>, DatasetError> {
    if topics.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let mut seen = HashSet::new();
    for t in &topics {
        if !seen.insert(t.id()) {
            return Err(DatasetError::DuplicateTopicId(t.id().to_string()));
        }
    }
    Ok(topics)
}

pub fn parse_jsonl(text: &str) -> Result<Vec<Topic>, DatasetError> {
    let mut topics = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let topic: Topic = serde_json::from_str(line).map_err(|e| parse_err(i as u64 + 1, e))?;
        topics.push(topic);
    }
    check_unique(topics)
}

pub fn write_jsonl<W: Write>(topics: &[Topic], mut out: W) -> io::Result<()> {
    for topic in topics {
        serde_json::to_writer(&mut out, topic)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl(topics: &[Topic]) -> String {
    let mut buf = Vec::new();
    write_jsonl(topics, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[derive(Debug, Deserialize)]
struct BhatiaRow {
    topic_id: String,
    #[allow(dead_code)]
    domain: String,
    terms: String,
    label: String,
    avg_rating: f64,
}

pub fn parse_bhatia_csv(text: &str) -> Result<Vec<Topic>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| parse_err(1, e))?.clone();
    let mut grouped: IndexMap<String, (String, Vec<String>, u64)> = IndexMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e))?;
        let line = record.position().map_or(0, |p| p.line());
        let row: BhatiaRow = record.deserialize(Some(&headers)).map_err(|e| parse_err(line, e))?;
        if row.avg_rating < MIN_BHATIA_RATING {
            continue;
        }
        match grouped.get_mut(&row.topic_id) {
            Some((terms, labels, _)) => {
                if *terms != row.terms {
                    return Err(parse_err(line, format!("topic `{}` listed with different terms", row.topic_id)));
                }
                labels.push(row.label);
            }
            None => {
                grouped.insert(row.topic_id.clone(), (row.terms, vec![row.label], line));
            }
        }
    }
    let topics = grouped
        .into_iter()
        .map(|(id, (terms, labels, line))| {
            Topic::new(id, terms.split_whitespace(), labels).map_err(|e: TopicError| parse_err(line, e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_unique(topics)
}

pub fn parse_newsgroups_tsv(text: &str) -> Result<Vec<Topic>, DatasetError> {
    let mut topics = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if topics.is_empty() && fields[0].eq_ignore_ascii_case("label") {
            continue;
        }
        if fields.len() != NEWSGROUPS_WORDS + 1 {
            return Err(parse_err(
                lineno,
                format!("expected a label and {NEWSGROUPS_WORDS} words, found {} fields", fields.len()),
            ));
        }
        let label = fields[0].to_lowercase();
        let topic = Topic::new(label.clone(), &fields[1..], [label]).map_err(|e| parse_err(lineno, e))?;
        topics.push(topic);
    }
    check_unique(topics)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub topic_count: usize,
    pub reference_pairs: usize,
    /// Topics without references; they cannot be evaluated.
    pub zero_reference_topics: Vec<String>,
    /// words-per-topic → number of topics
    pub words_histogram: BTreeMap<usize, usize>,
}

pub fn validate_bhatia(topics: &[Topic]) -> ValidationReport {
    let mut words_histogram = BTreeMap::new();
    for t in topics {
        *words_histogram.entry(t.words().len()).or_insert(0) += 1;
    }
    ValidationReport {
        topic_count: topics.len(),
        reference_pairs: topics.iter().map(|t| t.references().len()).sum(),
        zero_reference_topics: topics
            .iter()
            .filter(|t| t.references().is_empty())
            .map(|t| t.id().to_string())
            .collect(),
        words_histogram,
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), DatasetError> {
    fs::write(path, contents).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
}
