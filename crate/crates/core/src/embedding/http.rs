//! Client for a batch embedding server.
//!
//! `POST {endpoint}/embed` with `{"model", "texts"}`; the server answers
//! `{"model", "dim", "embeddings"}` with one row per input text.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbeddingBackend, EmbeddingError};
use crate::retry::{retry, Failure, RetryPolicy};

#[derive(Debug, Serialize)]
pub struct EmbedRequest<'a> {
    pub model: &'a str,
    pub texts: &'a [String],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EmbedResponse {
    pub model: String,
    pub dim: usize,
    pub embeddings: Vec<Vec<f64>>,
}

pub struct HttpBackend {
    url: String,
    model_id: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
}

impl HttpBackend {
    pub fn new(endpoint_url: &str, model_id: &str, timeout: Duration, retry: RetryPolicy) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        Self {
            url: format!("{}/embed", endpoint_url.trim_end_matches('/')),
            model_id: model_id.to_string(),
            agent,
            retry,
        }
    }

    fn post(&self, body: &str) -> Result<String, Failure<EmbeddingError>> {
        let unavailable = |msg: String| Failure::Retry(EmbeddingError::BackendUnavailable(msg));
        match self.agent.post(&self.url).set("Content-Type", "application/json").send_string(body) {
            Ok(resp) if resp.status() == 200 => {
                resp.into_string().map_err(|e| unavailable(format!("reading response from {}: {e}", self.url)))
            }
            Ok(resp) => Err(unavailable(format!("{} answered HTTP {}", self.url, resp.status()))),
            Err(ureq::Error::Status(code, _)) => Err(unavailable(format!("{} answered HTTP {code}", self.url))),
            Err(e) => Err(unavailable(format!("{}: {e}", self.url))),
        }
    }
}

impl EmbeddingBackend for HttpBackend {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        let body =
            serde_json::to_string(&EmbedRequest { model: &self.model_id, texts }).expect("request body serializes");
        let raw = retry(&self.retry, || self.post(&body))?;
        let resp: EmbedResponse = serde_json::from_str(&raw)
            .map_err(|e| EmbeddingError::BackendUnavailable(format!("malformed response: {e}")))?;
        if resp.model != self.model_id {
            return Err(EmbeddingError::BackendUnavailable(format!(
                "requested model `{}` but server answered for `{}`",
                self.model_id, resp.model
            )));
        }
        if resp.embeddings.len() != texts.len() {
            return Err(EmbeddingError::BackendUnavailable(format!(
                "sent {} texts, received {} embeddings",
                texts.len(),
                resp.embeddings.len()
            )));
        }
        if let Some(row) = resp.embeddings.iter().find(|row| row.len() != resp.dim) {
            return Err(EmbeddingError::DimMismatch { expected: resp.dim, actual: row.len() });
        }
        Ok(resp.embeddings)
    }
}
