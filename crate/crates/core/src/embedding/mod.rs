//! Text embedding: pluggable backends behind a caching, batching front end.

mod cache;
mod hash;
mod http;
mod vector;

use std::io;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::cache_file_path;
pub use hash::{HashBackend, HASH_DIM, HASH_MODEL_ID, HASH_SEED};
pub use http::{EmbedRequest, EmbedResponse, HttpBackend};
pub use vector::{cosine, cosine_slices, l2_norm};

use crate::retry::RetryPolicy;
use crate::sentence::build_sentence;
use crate::types::{EmbeddingVector, Topic, VectorError};
use cache::EmbeddingCache;

pub const EMBED_URL_ENV: &str = "TOPICLABEL_EMBED_URL";

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("no texts to embed, or an empty text")]
    EmptyInput,
    #[error("embedding backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("cannot take cosine of a zero vector")]
    ZeroVector,
    #[error("backend returned an invalid vector: {0}")]
    InvalidVector(#[from] VectorError),
    #[error("invalid embedder configuration: {0}")]
    Config(String),
    #[error("embedding cache: {0}")]
    Cache(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    TestHash,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderConfig {
    pub backend: BackendKind,
    pub endpoint_url: Option<String>,
    pub model_id: String,
    pub batch_size: usize,
    pub timeout_ms: u64,
    pub cache_dir: Option<PathBuf>,
}

impl EmbedderConfig {
    pub fn test_hash() -> Self {
        Self {
            backend: BackendKind::TestHash,
            endpoint_url: None,
            model_id: HASH_MODEL_ID.to_string(),
            batch_size: 32,
            timeout_ms: 30_000,
            cache_dir: None,
        }
    }

    pub fn http(endpoint_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            backend: BackendKind::Http,
            endpoint_url: Some(endpoint_url.into()),
            model_id: model_id.into(),
            ..Self::test_hash()
        }
    }

    /// `TOPICLABEL_EMBED_URL`, when set, replaces the endpoint.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(url) = std::env::var(EMBED_URL_ENV) {
            if !url.trim().is_empty() {
                self.endpoint_url = Some(url);
            }
        }
        self
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.batch_size == 0 {
            return Err(EmbeddingError::Config("batch_size must be positive".into()));
        }
        if self.timeout_ms == 0 {
            return Err(EmbeddingError::Config("timeout_ms must be positive".into()));
        }
        if self.model_id.trim().is_empty() {
            return Err(EmbeddingError::Config("model_id is empty".into()));
        }
        if self.backend == BackendKind::Http && self.endpoint_url.as_deref().is_none_or(|u| u.trim().is_empty()) {
            return Err(EmbeddingError::Config("http backend needs an endpoint_url".into()));
        }
        Ok(())
    }
}

/// Anything that can turn a batch of texts into raw vectors, one per text.
pub trait EmbeddingBackend: Send + Sync {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbeddingError>;
}

/// Caching, batching front end over an [`EmbeddingBackend`].
///
/// Safe to share across threads. Concurrent misses on the same text may both
/// reach the backend; the results are identical so the last write wins.
pub struct Embedder {
    model_id: String,
    batch_size: usize,
    backend: Box<dyn EmbeddingBackend>,
    cache: EmbeddingCache,
}

impl std::fmt::Debug for Embedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Embedder")
            .field("model_id", &self.model_id)
            .field("batch_size", &self.batch_size)
            .field("cached", &self.cache.len())
            .finish()
    }
}

impl Embedder {
    pub fn from_config(config: &EmbedderConfig) -> Result<Self, EmbeddingError> {
        config.validate()?;
        let backend: Box<dyn EmbeddingBackend> = match config.backend {
            BackendKind::TestHash => Box::new(HashBackend),
            BackendKind::Http => Box::new(HttpBackend::new(
                config.endpoint_url.as_deref().unwrap_or_default(),
                &config.model_id,
                Duration::from_millis(config.timeout_ms),
                RetryPolicy::default(),
            )),
        };
        Self::with_backend(&config.model_id, config.batch_size, backend, config.cache_dir.as_deref())
    }

    pub fn test_hash() -> Self {
        Self::from_config(&EmbedderConfig::test_hash()).expect("hash embedder config is valid")
    }

    pub fn with_backend(
        model_id: &str,
        batch_size: usize,
        backend: Box<dyn EmbeddingBackend>,
        cache_dir: Option<&std::path::Path>,
    ) -> Result<Self, EmbeddingError> {
        if batch_size == 0 {
            return Err(EmbeddingError::Config("batch_size must be positive".into()));
        }
        let cache = match cache_dir {
            Some(dir) => EmbeddingCache::open(dir, model_id)?,
            None => EmbeddingCache::in_memory(),
        };
        Ok(Self { model_id: model_id.to_string(), batch_size, backend, cache })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    /// Dimension of the vectors seen so far; `None` before the first embedding.
    pub fn dim(&self) -> Option<usize> {
        self.cache.dim()
    }

    /// One vector per input text, in input order. Cache misses are sent to
    /// the backend in batches of `batch_size`; duplicates are embedded once.
    pub fn embed_texts<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        if texts.is_empty() || texts.iter().any(|t| t.as_ref().is_empty()) {
            return Err(EmbeddingError::EmptyInput);
        }
        let mut seen = std::collections::HashSet::new();
        let misses: Vec<String> = texts
            .iter()
            .map(AsRef::as_ref)
            .filter(|t| !self.cache.contains(t) && seen.insert(*t))
            .map(str::to_string)
            .collect();
        for chunk in misses.chunks(self.batch_size) {
            let rows = self.backend.embed_batch(chunk)?;
            if rows.len() != chunk.len() {
                return Err(EmbeddingError::BackendUnavailable(format!(
                    "backend returned {} vectors for {} texts",
                    rows.len(),
                    chunk.len()
                )));
            }
            for row in &rows {
                if row.is_empty() {
                    return Err(VectorError::Empty.into());
                }
                if let Some((index, &value)) = row.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                    return Err(VectorError::NonFinite { index, value }.into());
                }
            }
            self.cache.insert_batch(chunk.iter().cloned().zip(rows).collect())?;
        }
        if !misses.is_empty() {
            self.cache.flush()?;
        }
        texts
            .iter()
            .map(|t| {
                let values = self.cache.get(t.as_ref()).expect("every text was cached above");
                Ok(EmbeddingVector::new(values, self.model_id.as_str())?)
            })
            .collect()
    }

    pub fn embed_text(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        Ok(self.embed_texts(&[text])?.remove(0))
    }

    /// Embedding of the topic's comma-joined sentence.
    pub fn embed_topic(&self, topic: &Topic) -> Result<EmbeddingVector, EmbeddingError> {
        self.embed_text(build_sentence(topic).as_str())
    }
}
