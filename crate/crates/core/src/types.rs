//! Domain types shared by every stage of the labeling pipeline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopicError {
    #[error("word is empty after normalization")]
    EmptyWord,
    #[error("topic `{0}` has no words")]
    EmptyTopic(String),
    #[error("topic id is empty")]
    EmptyId,
}

/// Canonical form shared by dataset words and ConceptNet terms: trimmed,
/// lowercased, underscores read as spaces, whitespace runs collapsed.
pub fn normalize_word(raw: &str) -> Result<String, TopicError> {
    let lowered = raw.to_lowercase().replace('_', " ");
    let normalized = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    if normalized.is_empty() {
        return Err(TopicError::EmptyWord);
    }
    Ok(normalized)
}

/// A topic-model output. `words` keeps the model's ranking order, which
/// downstream tie-breaking depends on; duplicates are kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTopic", into = "RawTopic")]
pub struct Topic {
    id: String,
    words: Vec<String>,
    references: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawTopic {
    id: String,
    words: Vec<String>,
    #[serde(default)]
    references: Vec<String>,
}

impl TryFrom<RawTopic> for Topic {
    type Error = TopicError;

    fn try_from(raw: RawTopic) -> Result<Self, Self::Error> {
        Topic::new(raw.id, raw.words, raw.references)
    }
}

impl From<Topic> for RawTopic {
    fn from(topic: Topic) -> Self {
        RawTopic { id: topic.id, words: topic.words, references: topic.references }
    }
}

impl Topic {
    /// Normalizes every word; references are trimmed and lowercased but
    /// otherwise kept verbatim.
    pub fn new<I, W, R, S>(id: impl Into<String>, words: I, references: R) -> Result<Self, TopicError>
    where
        I: IntoIterator<Item = W>,
        W: AsRef<str>,
        R: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(TopicError::EmptyId);
        }
        let words = words.into_iter().map(|w| normalize_word(w.as_ref())).collect::<Result<Vec<_>, _>>()?;
        if words.is_empty() {
            return Err(TopicError::EmptyTopic(id));
        }
        let references =
            references.into_iter().map(|r| r.as_ref().trim().to_lowercase()).filter(|r| !r.is_empty()).collect();
        Ok(Self { id, words, references })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn references(&self) -> &[String] {
        &self.references
    }
}

/// Fixed-dimension embedding produced by one model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    model_id: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorError {
    #[error("embedding has no components")]
    Empty,
    #[error("embedding component {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>, model_id: impl Into<String>) -> Result<Self, VectorError> {
        if values.is_empty() {
            return Err(VectorError::Empty);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(VectorError::NonFinite { index, value });
        }
        Ok(Self { values, model_id: model_id.into() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    /// Returns a copy with every component multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, VectorError> {
        Self::new(self.values.iter().map(|v| v * factor).collect(), self.model_id.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    TopicWord,
    GraphNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub text: String,
    pub score: f64,
    pub source: CandidateSource,
}

/// Selected label plus every scored candidate, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelResult {
    pub topic_id: String,
    pub label: String,
    pub score: f64,
    pub candidates: Vec<ScoredCandidate>,
}

impl LabelResult {
    /// Builds a result from candidates listed in tie-break order: the sort is
    /// stable, so equal scores keep their incoming order.
    pub(crate) fn from_ranked(topic_id: &str, mut candidates: Vec<ScoredCandidate>) -> Option<Self> {
        candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
        let best = candidates.first()?;
        Some(Self { topic_id: topic_id.to_string(), label: best.text.clone(), score: best.score, candidates })
    }
}
