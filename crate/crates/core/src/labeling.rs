//! Label selection by nearest candidate to the topic-sentence embedding.
//!
//! Both selectors score each candidate by cosine against the embedding of the
//! comma-joined topic words and keep the best one. They differ only in where
//! candidates come from: the topic words themselves, or every node of the
//! ConceptNet graph grown from those words.

use thiserror::Error;

use crate::conceptnet::ConceptSource;
use crate::embedding::{cosine, Embedder, EmbeddingError};
use crate::graph::{candidate_nodes, expand_graph, ExpansionConfig, GraphError, KnowledgeGraph};
use crate::types::{CandidateSource, EmbeddingVector, LabelResult, ScoredCandidate, Topic};

#[derive(Debug, Error)]
pub enum LabelError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("graph for topic `{0}` has no nodes")]
    EmptyGraph(String),
}

/// Scores `texts` against `reference`, keeping input order.
fn score_all(
    reference: &EmbeddingVector,
    texts: &[String],
    source: CandidateSource,
    embedder: &Embedder,
) -> Result<Vec<ScoredCandidate>, LabelError> {
    let vectors = embedder.embed_texts(texts)?;
    texts
        .iter()
        .zip(&vectors)
        .map(|(text, v)| Ok(ScoredCandidate { text: text.clone(), score: cosine(reference, v)?, source }))
        .collect()
}

/// Direct similarity labeling: the topic word closest to the topic sentence.
/// Ties go to the earlier word.
pub fn dsl(topic: &Topic, embedder: &Embedder) -> Result<LabelResult, LabelError> {
    let topic_vec = embedder.embed_topic(topic)?;
    let scored = score_all(&topic_vec, topic.words(), CandidateSource::TopicWord, embedder)?;
    Ok(LabelResult::from_ranked(topic.id(), scored).expect("topics have at least one word"))
}

/// Graph-enhanced labeling: expands the topic words through `source` and
/// picks the graph node closest to the topic sentence. Ties go to the node
/// earlier in [`candidate_nodes`] order (lower hop, then lexicographic).
pub fn gel(
    topic: &Topic,
    embedder: &Embedder,
    expansion: &ExpansionConfig,
    source: &dyn ConceptSource,
) -> Result<LabelResult, LabelError> {
    // The reference embedding depends on the topic words only.
    let topic_vec = embedder.embed_topic(topic)?;
    let graph = expand_graph(topic.words(), expansion, source)?;
    gel_on_graph(topic, &topic_vec, &graph, embedder)
}

/// The scoring half of [`gel`], for a graph built elsewhere.
pub fn gel_on_graph(
    topic: &Topic,
    topic_vec: &EmbeddingVector,
    graph: &KnowledgeGraph,
    embedder: &Embedder,
) -> Result<LabelResult, LabelError> {
    let nodes = candidate_nodes(graph);
    if nodes.is_empty() {
        return Err(LabelError::EmptyGraph(topic.id().to_string()));
    }
    let scored = score_all(topic_vec, &nodes, CandidateSource::GraphNode, embedder)?;
    Ok(LabelResult::from_ranked(topic.id(), scored).expect("non-empty candidates"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dsl,
    Gel,
}
