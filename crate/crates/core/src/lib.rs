//! Topic labeling for topic-model outputs.
//!
//! A topic's words are joined into one sentence and embedded; the label is the
//! candidate whose embedding is closest to that sentence embedding. Candidates
//! are either the topic words ([`labeling::dsl`]) or every node of a
//! ConceptNet graph grown from them ([`labeling::gel`]). The
//! [`evaluation`] module scores labels against gold references.
//!
//! ```
//! use topiclabel::{labeling, Embedder, Topic};
//!
//! let topic = Topic::new("t1", ["game", "team", "hockey"], ["sport hockey"]).unwrap();
//! let embedder = Embedder::test_hash();
//! let result = labeling::dsl(&topic, &embedder).unwrap();
//! assert!(topic.words().contains(&result.label));
//! ```

pub mod cli;
pub mod conceptnet;
pub mod datasets;
pub mod embedding;
pub mod evaluation;
pub mod graph;
pub mod labeling;
pub mod retry;
pub mod sentence;
pub mod types;

pub use conceptnet::{ConceptNetClient, ConceptNetConfig, ConceptSource, StaticConceptSource};
pub use embedding::{cosine, Embedder, EmbedderConfig};
pub use graph::{expand_graph, ExpansionConfig, KnowledgeGraph};
pub use labeling::{dsl, gel, Algorithm};
pub use sentence::build_sentence;
pub use types::{normalize_word, CandidateSource, EmbeddingVector, LabelResult, ScoredCandidate, Topic};
