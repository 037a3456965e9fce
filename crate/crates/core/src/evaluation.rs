//! Label quality metrics.
//!
//! Two scorers compare a predicted label against gold references: plain
//! cosine between label embeddings, and a BERTScore-style greedy token match
//! (no idf weighting, no baseline rescaling). Each prediction is scored
//! against every reference of its topic and the best score is kept; corpus
//! figures are unweighted means over topics.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine, Embedder, EmbeddingError};
use crate::types::{EmbeddingVector, LabelResult, Topic};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("token list is empty")]
    EmptyTokens,
    #[error("no references to score against")]
    EmptyReferences,
    #[error("topic `{0}` has no reference labels")]
    MissingReferences(String),
    #[error("result for topic `{0}` has no matching topic")]
    TopicMismatch(String),
    #[error("external scores lack pair `{0}`")]
    MissingExternalScore(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreTriple {
    /// Fills in f1 as the harmonic mean; zero when precision + recall is zero.
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let denom = precision + recall;
        let f1 = if denom == 0.0 { 0.0 } else { 2.0 * precision * recall / denom };
        Self { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Bertscore,
    Cosine,
}

/// Cosine between the embeddings of two label strings.
pub fn cosine_eval(predicted: &str, gold: &str, embedder: &Embedder) -> Result<f64, EvalError> {
    let v = embedder.embed_texts(&[predicted, gold])?;
    Ok(cosine(&v[0], &v[1])?)
}

/// Greedy-match precision/recall/F1 over pre-computed token embeddings.
///
/// Precision averages, over candidate tokens, the best cosine to any
/// reference token; recall does the same from the reference side.
pub fn token_bertscore(candidate: &[EmbeddingVector], reference: &[EmbeddingVector]) -> Result<ScoreTriple, EvalError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(EvalError::EmptyTokens);
    }
    let sim = candidate
        .iter()
        .map(|c| reference.iter().map(|r| cosine(c, r)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let precision = sim.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum::<f64>()
        / candidate.len() as f64;
    let recall =
        (0..reference.len()).map(|j| sim.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max)).sum::<f64>()
            / reference.len() as f64;
    Ok(ScoreTriple::from_pr(precision, recall))
}

/// Whitespace tokens of a label.
pub fn tokenize(label: &str) -> Vec<&str> {
    label.split_whitespace().collect()
}

/// BERTScore of two label strings, embedding each whitespace token on its own.
pub fn bertscore_text(candidate: &str, reference: &str, embedder: &Embedder) -> Result<ScoreTriple, EvalError> {
    let cand = tokenize(candidate);
    let refs = tokenize(reference);
    if cand.is_empty() || refs.is_empty() {
        return Err(EvalError::EmptyTokens);
    }
    let cand = embedder.embed_texts(&cand)?;
    let refs = embedder.embed_texts(&refs)?;
    token_bertscore(&cand, &refs)
}

/// Scores `candidate` against each reference and keeps the highest; the
/// earliest reference wins ties. Returns the winning index and score.
pub fn multi_reference_best<S, F>(candidate: &str, references: &[S], mut scorer: F) -> Result<(usize, f64), EvalError>
where
    S: AsRef<str>,
    F: FnMut(&str, &str) -> Result<f64, EvalError>,
{
    let scores = references.iter().map(|r| scorer(candidate, r.as_ref())).collect::<Result<Vec<_>, _>>()?;
    let best = first_max(&scores).ok_or(EvalError::EmptyReferences)?;
    Ok((best, scores[best]))
}

/// Index of the largest value, earliest on ties.
fn first_max(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopicScore {
    Triple(ScoreTriple),
    Cosine(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicEval {
    pub topic_id: String,
    pub predicted: String,
    pub best_reference: String,
    pub score: TopicScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub per_topic: Vec<TopicEval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_cosine: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl EvalReport {
    fn from_topics(mode: EvalMode, per_topic: Vec<TopicEval>) -> Self {
        let triples = || {
            per_topic.iter().filter_map(|t| match t.score {
                TopicScore::Triple(s) => Some(s),
                TopicScore::Cosine(_) => None,
            })
        };
        let mut report = Self {
            mode,
            per_topic: Vec::new(),
            mean_precision: None,
            mean_recall: None,
            mean_f1: None,
            mean_cosine: None,
        };
        match mode {
            EvalMode::Bertscore => {
                report.mean_precision = Some(mean(triples().map(|s| s.precision)));
                report.mean_recall = Some(mean(triples().map(|s| s.recall)));
                report.mean_f1 = Some(mean(triples().map(|s| s.f1)));
            }
            EvalMode::Cosine => {
                report.mean_cosine = Some(mean(per_topic.iter().filter_map(|t| match t.score {
                    TopicScore::Cosine(c) => Some(c),
                    TopicScore::Triple(_) => None,
                })));
            }
        }
        report.per_topic = per_topic;
        report
    }

    /// Fixed-width table: one row per topic, then the corpus means.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let id_w = self.per_topic.iter().map(|t| t.topic_id.len()).max().unwrap_or(5).max(5);
        let label_w = self.per_topic.iter().map(|t| t.predicted.len()).max().unwrap_or(5).max(5);
        let ref_w = self.per_topic.iter().map(|t| t.best_reference.len()).max().unwrap_or(9).max(9);
        match self.mode {
            EvalMode::Bertscore => {
                let _ = writeln!(
                    out,
                    "{:<id_w$}  {:<label_w$}  {:<ref_w$}  {:>9}  {:>9}  {:>9}",
                    "topic", "label", "reference", "precision", "recall", "f1"
                );
                for t in &self.per_topic {
                    if let TopicScore::Triple(s) = t.score {
                        let _ = writeln!(
                            out,
                            "{:<id_w$}  {:<label_w$}  {:<ref_w$}  {:>9.3}  {:>9.3}  {:>9.3}",
                            t.topic_id, t.predicted, t.best_reference, s.precision, s.recall, s.f1
                        );
                    }
                }
                let _ = writeln!(
                    out,
                    "{:<w$}  {:>9.3}  {:>9.3}  {:>9.3}",
                    format!("mean over {} topics", self.per_topic.len()),
                    self.mean_precision.unwrap_or_default(),
                    self.mean_recall.unwrap_or_default(),
                    self.mean_f1.unwrap_or_default(),
                    w = id_w + label_w + ref_w + 4
                );
            }
            EvalMode::Cosine => {
                let _ = writeln!(
                    out,
                    "{:<id_w$}  {:<label_w$}  {:<ref_w$}  {:>9}",
                    "topic", "label", "reference", "cosine"
                );
                for t in &self.per_topic {
                    if let TopicScore::Cosine(c) = t.score {
                        let _ = writeln!(
                            out,
                            "{:<id_w$}  {:<label_w$}  {:<ref_w$}  {:>9.3}",
                            t.topic_id, t.predicted, t.best_reference, c
                        );
                    }
                }
                let _ = writeln!(
                    out,
                    "{:<w$}  {:>9.3}",
                    format!("mean over {} topics", self.per_topic.len()),
                    self.mean_cosine.unwrap_or_default(),
                    w = id_w + label_w + ref_w + 4
                );
            }
        }
        out
    }
}

fn pair_topics<'a>(
    results: &'a [LabelResult],
    topics: &'a [Topic],
) -> Result<Vec<(&'a LabelResult, &'a Topic)>, EvalError> {
    let by_id: HashMap<&str, &Topic> = topics.iter().map(|t| (t.id(), t)).collect();
    results
        .iter()
        .map(|r| {
            let topic = by_id.get(r.topic_id.as_str()).ok_or_else(|| EvalError::TopicMismatch(r.topic_id.clone()))?;
            if topic.references().is_empty() {
                return Err(EvalError::MissingReferences(r.topic_id.clone()));
            }
            Ok((r, *topic))
        })
        .collect()
}

/// Scores every result against its topic's references and averages.
pub fn evaluate_corpus(
    results: &[LabelResult],
    topics: &[Topic],
    mode: EvalMode,
    embedder: &Embedder,
) -> Result<EvalReport, EvalError> {
    let mut per_topic = Vec::with_capacity(results.len());
    for (result, topic) in pair_topics(results, topics)? {
        let refs = topic.references();
        let (best, score) = match mode {
            EvalMode::Cosine => {
                let (i, c) = multi_reference_best(&result.label, refs, |p, g| cosine_eval(p, g, embedder))?;
                (i, TopicScore::Cosine(c))
            }
            EvalMode::Bertscore => {
                let triples =
                    refs.iter().map(|r| bertscore_text(&result.label, r, embedder)).collect::<Result<Vec<_>, _>>()?;
                let f1s: Vec<f64> = triples.iter().map(|t| t.f1).collect();
                let i = first_max(&f1s).ok_or(EvalError::EmptyReferences)?;
                (i, TopicScore::Triple(triples[i]))
            }
        };
        per_topic.push(TopicEval {
            topic_id: result.topic_id.clone(),
            predicted: result.label.clone(),
            best_reference: refs[best].clone(),
            score,
        });
    }
    Ok(EvalReport::from_topics(mode, per_topic))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringPair {
    pub id: String,
    pub candidate: String,
    pub reference: String,
}

/// Batch handed to an external BERTScore implementation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairsFile {
    pub pairs: Vec<ScoringPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScore {
    pub id: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Scores returned by the external implementation, keyed by pair id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresFile {
    pub scores: Vec<ExternalScore>,
}

pub fn pair_id(topic_id: &str, reference_index: usize) -> String {
    format!("{topic_id}#{reference_index}")
}

/// One pair per (result, reference) for external scoring.
pub fn external_pairs(results: &[LabelResult], topics: &[Topic]) -> Result<PairsFile, EvalError> {
    let mut pairs = Vec::new();
    for (result, topic) in pair_topics(results, topics)? {
        for (i, reference) in topic.references().iter().enumerate() {
            pairs.push(ScoringPair {
                id: pair_id(&result.topic_id, i),
                candidate: result.label.clone(),
                reference: reference.clone(),
            });
        }
    }
    Ok(PairsFile { pairs })
}

/// Builds a BERTScore report from externally computed pair scores, keeping
/// the best-F1 reference per topic.
pub fn evaluate_external(
    results: &[LabelResult],
    topics: &[Topic],
    scores: &ScoresFile,
) -> Result<EvalReport, EvalError> {
    let by_id: HashMap<&str, &ExternalScore> = scores.scores.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut per_topic = Vec::new();
    for (result, topic) in pair_topics(results, topics)? {
        let refs = topic.references();
        let lookup = |i: usize| {
            let id = pair_id(&result.topic_id, i);
            by_id.get(id.as_str()).copied().ok_or(EvalError::MissingExternalScore(id))
        };
        let found = (0..refs.len()).map(lookup).collect::<Result<Vec<_>, _>>()?;
        let f1s: Vec<f64> = found.iter().map(|s| s.f1).collect();
        let best = first_max(&f1s).ok_or(EvalError::EmptyReferences)?;
        let s = found[best];
        per_topic.push(TopicEval {
            topic_id: result.topic_id.clone(),
            predicted: result.label.clone(),
            best_reference: refs[best].clone(),
            score: TopicScore::Triple(ScoreTriple { precision: s.precision, recall: s.recall, f1: s.f1 }),
        });
    }
    Ok(EvalReport::from_topics(EvalMode::Bertscore, per_topic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::HashBackend;
    use crate::types::{CandidateSource, ScoredCandidate};

    fn v(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec(), "m").unwrap()
    }

    fn result(topic_id: &str, label: &str) -> LabelResult {
        LabelResult {
            topic_id: topic_id.into(),
            label: label.into(),
            score: 1.0,
            candidates: vec![ScoredCandidate { text: label.into(), score: 1.0, source: CandidateSource::TopicWord }],
        }
    }

    #[test]
    fn identical_tokens_score_one() {
        let s = token_bertscore(&[v(&[0.3, 0.4])], &[v(&[0.3, 0.4])]).unwrap();
        assert!((s.precision - 1.0).abs() < 1e-12 && (s.recall - 1.0).abs() < 1e-12 && (s.f1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_versus_two_tokens() {
        // candidate = reference token 1; cosine to reference token 2 is c = 0.6
        let r1 = v(&[1.0, 0.0]);
        let r2 = v(&[0.6, 0.8]);
        let s = token_bertscore(std::slice::from_ref(&r1), &[r1.clone(), r2]).unwrap();
        assert_eq!(s.precision, 1.0);
        assert!((s.recall - 0.8).abs() < 1e-12);
        assert!((s.f1 - 2.0 * 0.8 / 1.8).abs() < 1e-12);
    }

    #[test]
    fn empty_tokens_rejected() {
        assert!(matches!(token_bertscore(&[], &[v(&[1.0])]), Err(EvalError::EmptyTokens)));
        let e = Embedder::test_hash();
        assert!(matches!(bertscore_text("  ", "a", &e), Err(EvalError::EmptyTokens)));
    }

    #[test]
    fn f1_handles_zero() {
        assert_eq!(ScoreTriple::from_pr(0.0, 0.0).f1, 0.0);
    }

    #[test]
    fn cosine_eval_cases() {
        let e = Embedder::test_hash();
        assert!((cosine_eval("hockey", "hockey", &e).unwrap() - 1.0).abs() < 1e-6);
        let a = HashBackend::embed_one("a");
        let b = HashBackend::embed_one("b");
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let norms = a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((cosine_eval("a", "b", &e).unwrap() - dot / norms).abs() < 1e-12);
    }

    #[test]
    fn multi_reference_examples() {
        let e = Embedder::test_hash();
        let score = |p: &str, g: &str| cosine_eval(p, g, &e);
        assert_eq!(multi_reference_best("x", &["y"], score).unwrap().0, 0);
        let (i, s) = multi_reference_best("hockey", &["sport", "hockey", "ice"], score).unwrap();
        assert_eq!(i, 1);
        assert!((s - 1.0).abs() < 1e-9);
        let refs = ["religion", "atheism", "belief"];
        let individual: Vec<f64> = refs.iter().map(|r| cosine_eval("god", r, &e).unwrap()).collect();
        let (_, best) = multi_reference_best("god", &refs, score).unwrap();
        assert_eq!(best, individual.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        assert!(matches!(multi_reference_best::<&str, _>("x", &[], score), Err(EvalError::EmptyReferences)));
        let (tie, _) = multi_reference_best("x", &["a", "b"], |_, _| Ok(0.5)).unwrap();
        assert_eq!(tie, 0);
    }

    #[test]
    fn corpus_means() {
        let e = Embedder::test_hash();
        let topics = vec![
            Topic::new("t1", ["hockey"], ["hockey"]).unwrap(),
            Topic::new("t2", ["god"], ["religion", "atheism"]).unwrap(),
        ];
        let single = evaluate_corpus(&[result("t1", "hockey")], &topics, EvalMode::Cosine, &e).unwrap();
        assert!((single.mean_cosine.unwrap() - 1.0).abs() < 1e-9);

        let results = [result("t1", "hockey"), result("t2", "god")];
        let report = evaluate_corpus(&results, &topics, EvalMode::Cosine, &e).unwrap();
        let scores: Vec<f64> = report
            .per_topic
            .iter()
            .map(|t| match t.score {
                TopicScore::Cosine(c) => c,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(report.mean_cosine.unwrap(), (scores[0] + scores[1]) / 2.0);

        let bert = evaluate_corpus(&results, &topics, EvalMode::Bertscore, &e).unwrap();
        assert!(bert.mean_f1.is_some() && bert.mean_cosine.is_none());
        assert!(bert.to_table().contains("mean over 2 topics"));
    }

    #[test]
    fn corpus_errors() {
        let e = Embedder::test_hash();
        let topics = vec![Topic::new("t1", ["a"], [] as [&str; 0]).unwrap()];
        assert!(matches!(
            evaluate_corpus(&[result("t1", "a")], &topics, EvalMode::Cosine, &e),
            Err(EvalError::MissingReferences(_))
        ));
        assert!(matches!(
            evaluate_corpus(&[result("zz", "a")], &topics, EvalMode::Cosine, &e),
            Err(EvalError::TopicMismatch(_))
        ));
    }

    #[test]
    fn external_round_trip() {
        let topics = vec![Topic::new("t1", ["a"], ["x", "y"]).unwrap(), Topic::new("t2", ["b"], ["z"]).unwrap()];
        let results = [result("t1", "a"), result("t2", "b")];
        let pairs = external_pairs(&results, &topics).unwrap();
        assert_eq!(pairs.pairs.len(), 3);
        let scores = ScoresFile {
            scores: pairs
                .pairs
                .iter()
                .map(|p| {
                    let f1 = if p.reference == "y" { 0.9 } else { 0.5 };
                    ExternalScore { id: p.id.clone(), precision: f1, recall: f1, f1 }
                })
                .collect(),
        };
        let report = evaluate_external(&results, &topics, &scores).unwrap();
        assert_eq!(report.per_topic[0].best_reference, "y");
        assert!((report.mean_f1.unwrap() - 0.7).abs() < 1e-12);
        let partial = ScoresFile { scores: scores.scores[..1].to_vec() };
        assert!(matches!(evaluate_external(&results, &topics, &partial), Err(EvalError::MissingExternalScore(_))));
    }
}
