//! ConceptNet lookups: an HTTP client with a shared token bucket, retries and
//! a committable on-disk cache of raw API responses, plus an in-memory source
//! for synthetic graphs.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant, SystemTime};

use percent_encoding::{utf8_percent_encode, AsciiSet, CONTROLS, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::retry::{retry, Failure, RetryPolicy};
use crate::types::{normalize_word, TopicError};

pub const DEFAULT_BASE_URL: &str = "https://api.conceptnet.io";
pub const BASE_URL_ENV: &str = "TOPICLABEL_CONCEPTNET_URL";
pub const DEFAULT_EDGE_LIMIT: usize = 50;
pub const MAX_EDGE_LIMIT: usize = 1000;

const PATH_SEGMENT: &AsciiSet = &CONTROLS.add(b' ').add(b'"').add(b'#').add(b'%').add(b'?').add(b'<').add(b'>');

#[derive(Debug, Error)]
pub enum ConceptNetError {
    #[error("term is empty")]
    EmptyWord,
    #[error("edge limit {0} outside 1..=1000")]
    InvalidLimit(usize),
    #[error("ConceptNet request failed: {0}")]
    Network(String),
    #[error("ConceptNet kept answering 429 Too Many Requests")]
    RateLimited,
    #[error("offline mode: no cached response for `{term}` (limit {limit})")]
    CacheMiss { term: String, limit: usize },
    #[error("unparseable ConceptNet response for `{term}`: {source}")]
    Parse { term: String, source: serde_json::Error },
    #[error("ConceptNet cache: {0}")]
    Cache(#[from] io::Error),
}

impl From<TopicError> for ConceptNetError {
    fn from(_: TopicError) -> Self {
        ConceptNetError::EmptyWord
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptEdge {
    pub start_term: String,
    pub end_term: String,
    pub relation: String,
    pub weight: f64,
}

impl ConceptEdge {
    /// The endpoint that is not `term`, if `term` is one of the endpoints.
    pub fn other_end(&self, term: &str) -> Option<&str> {
        if self.start_term == term {
            Some(&self.end_term)
        } else if self.end_term == term {
            Some(&self.start_term)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptQueryResult {
    pub term: String,
    pub edges: Vec<ConceptEdge>,
    pub fetched_at: SystemTime,
}

/// Anything that answers "which concepts touch this term".
pub trait ConceptSource: Send + Sync {
    fn query(&self, term: &str, limit: usize) -> Result<ConceptQueryResult, ConceptNetError>;
}

pub fn term_to_uri(term: &str) -> Result<String, ConceptNetError> {
    let term = term.trim();
    if term.is_empty() {
        return Err(ConceptNetError::EmptyWord);
    }
    Ok(format!("/c/en/{}", term.replace(' ', "_")))
}

/// Cache file name for a `(term, limit)` query.
pub fn cache_file_name(term: &str, limit: usize) -> String {
    format!("{}_{limit}.json", utf8_percent_encode(term, NON_ALPHANUMERIC))
}

#[derive(Deserialize)]
struct RawResponse {
    #[serde(default)]
    edges: Vec<RawEdge>,
}

#[derive(Deserialize)]
struct RawEdge {
    start: RawNode,
    end: RawNode,
    rel: RawRel,
    #[serde(default = "default_weight")]
    weight: f64,
}

#[derive(Deserialize)]
struct RawNode {
    term: Option<String>,
    #[serde(rename = "@id")]
    id: Option<String>,
    language: Option<String>,
}

#[derive(Deserialize)]
struct RawRel {
    label: Option<String>,
    #[serde(rename = "@id")]
    id: Option<String>,
}

fn default_weight() -> f64 {
    1.0
}

impl RawNode {
    /// `(language, normalized term)` from a `/c/<lang>/<text>[/...]` URI.
    fn english_term(&self) -> Option<String> {
        let uri = self.term.as_deref().or(self.id.as_deref())?;
        let mut parts = uri.split('/');
        if parts.next() != Some("") || parts.next() != Some("c") {
            return None;
        }
        let uri_lang = parts.next()?;
        let text = parts.next()?;
        let lang = self.language.as_deref().unwrap_or(uri_lang);
        if lang != "en" || uri_lang != "en" {
            return None;
        }
        normalize_word(text).ok()
    }
}

impl RawRel {
    fn name(&self) -> String {
        self.label
            .clone()
            .or_else(|| self.id.as_deref().map(|id| id.trim_start_matches("/r/").to_string()))
            .unwrap_or_else(|| "RelatedTo".to_string())
    }
}

/// Parses a raw ConceptNet body for `term`, keeping English edges that touch
/// `term`, at most `limit` of them. Error bodies (unknown concept) parse as
/// an empty edge list.
pub fn parse_response(term: &str, body: &str, limit: usize) -> Result<Vec<ConceptEdge>, ConceptNetError> {
    let raw: RawResponse =
        serde_json::from_str(body).map_err(|source| ConceptNetError::Parse { term: term.to_string(), source })?;
    let edges = raw
        .edges
        .into_iter()
        .filter_map(|e| {
            let start_term = e.start.english_term()?;
            let end_term = e.end.english_term()?;
            if start_term != term && end_term != term {
                return None;
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return None;
            }
            Some(ConceptEdge { start_term, end_term, relation: e.rel.name(), weight: e.weight })
        })
        .take(limit)
        .collect();
    Ok(edges)
}

/// Renders edges in the API's response shape; used to build fixtures.
pub fn render_response(term: &str, edges: &[ConceptEdge]) -> String {
    let node = |t: &str| {
        let uri = format!("/c/en/{}", t.replace(' ', "_"));
        json!({"@id": uri, "label": t, "language": "en", "term": uri})
    };
    let edges: Vec<_> = edges
        .iter()
        .map(|e| {
            json!({
                "@id": format!("/a/[/r/{}/,/c/en/{}/,/c/en/{}/]", e.relation, e.start_term.replace(' ', "_"), e.end_term.replace(' ', "_")),
                "start": node(&e.start_term),
                "end": node(&e.end_term),
                "rel": {"@id": format!("/r/{}", e.relation), "label": e.relation},
                "weight": e.weight,
            })
        })
        .collect();
    let body = json!({"@id": format!("/c/en/{}", term.replace(' ', "_")), "edges": edges});
    serde_json::to_string_pretty(&body).expect("json value serializes")
}

/// Serializes dispatch to at most `rate` requests per second, burst of one.
#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    /// A non-positive or non-finite rate disables limiting.
    pub fn new(rate: f64) -> Self {
        Self { rate, state: Mutex::new((1.0, Instant::now())) }
    }

    pub fn acquire(&self) {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return;
        }
        let mut state = self.state.lock().expect("token bucket lock");
        loop {
            let now = Instant::now();
            let (tokens, last) = *state;
            let tokens = (tokens + now.duration_since(last).as_secs_f64() * self.rate).min(1.0);
            if tokens >= 1.0 {
                *state = (tokens - 1.0, now);
                return;
            }
            *state = (tokens, now);
            thread::sleep(Duration::from_secs_f64((1.0 - tokens) / self.rate));
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConceptNetConfig {
    pub base_url: String,
    pub cache_dir: Option<PathBuf>,
    pub offline: bool,
    pub requests_per_second: f64,
    pub timeout: Duration,
    pub retry: RetryPolicy,
}

impl Default for ConceptNetConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.to_string(),
            cache_dir: None,
            offline: false,
            requests_per_second: 2.0,
            timeout: Duration::from_secs(30),
            retry: RetryPolicy::default(),
        }
    }
}

impl ConceptNetConfig {
    pub fn offline(cache_dir: impl Into<PathBuf>) -> Self {
        Self { cache_dir: Some(cache_dir.into()), offline: true, ..Self::default() }
    }

    /// `TOPICLABEL_CONCEPTNET_URL`, when set, replaces the base URL.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(url) = std::env::var(BASE_URL_ENV) {
            if !url.trim().is_empty() {
                self.base_url = url;
            }
        }
        self
    }
}

pub struct ConceptNetClient {
    config: ConceptNetConfig,
    agent: ureq::Agent,
    bucket: TokenBucket,
    memo: Mutex<HashMap<(String, usize), (String, SystemTime)>>,
    requests: AtomicUsize,
}

impl ConceptNetClient {
    pub fn new(config: ConceptNetConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        let bucket = TokenBucket::new(config.requests_per_second);
        Self { config, agent, bucket, memo: Mutex::new(HashMap::new()), requests: AtomicUsize::new(0) }
    }

    /// HTTP requests issued so far, retries included.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn config(&self) -> &ConceptNetConfig {
        &self.config
    }

    fn cache_path(&self, term: &str, limit: usize) -> Option<PathBuf> {
        self.config.cache_dir.as_ref().map(|dir| dir.join("conceptnet").join(cache_file_name(term, limit)))
    }

    fn url(&self, term: &str, limit: usize) -> Result<String, ConceptNetError> {
        let uri = term_to_uri(term)?;
        Ok(format!(
            "{}{}?limit={limit}",
            self.config.base_url.trim_end_matches('/'),
            utf8_percent_encode(&uri, PATH_SEGMENT)
        ))
    }

    fn fetch(&self, url: &str) -> Result<String, ConceptNetError> {
        retry(&self.config.retry, || {
            self.bucket.acquire();
            self.requests.fetch_add(1, Ordering::SeqCst);
            match self.agent.get(url).call() {
                Ok(resp) => {
                    resp.into_string().map_err(|e| Failure::Retry(ConceptNetError::Network(format!("{url}: {e}"))))
                }
                Err(ureq::Error::Status(404, _)) => Ok(r#"{"edges": []}"#.to_string()),
                Err(ureq::Error::Status(429, _)) => Err(Failure::Retry(ConceptNetError::RateLimited)),
                Err(ureq::Error::Status(code, _)) if code >= 500 => {
                    Err(Failure::Retry(ConceptNetError::Network(format!("{url}: HTTP {code}"))))
                }
                Err(ureq::Error::Status(code, _)) => {
                    Err(Failure::Fatal(ConceptNetError::Network(format!("{url}: HTTP {code}"))))
                }
                Err(e) => Err(Failure::Retry(ConceptNetError::Network(format!("{url}: {e}")))),
            }
        })
    }

    fn raw_response(&self, term: &str, limit: usize) -> Result<(String, SystemTime), ConceptNetError> {
        let key = (term.to_string(), limit);
        if let Some(hit) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(hit.clone());
        }
        let path = self.cache_path(term, limit);
        if let Some(path) = &path {
            match fs::read_to_string(path) {
                Ok(body) => {
                    let stamp = fs::metadata(path).and_then(|m| m.modified()).unwrap_or_else(|_| SystemTime::now());
                    self.memo.lock().expect("memo lock").insert(key, (body.clone(), stamp));
                    return Ok((body, stamp));
                }
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(e) => return Err(e.into()),
            }
        }
        if self.config.offline {
            return Err(ConceptNetError::CacheMiss { term: term.to_string(), limit });
        }
        let body = self.fetch(&self.url(term, limit)?)?;
        // Refuse to cache something that will not parse later.
        parse_response(term, &body, limit)?;
        if let Some(path) = &path {
            write_atomic(path, &body)?;
        }
        let stamp = SystemTime::now();
        self.memo.lock().expect("memo lock").insert(key, (body.clone(), stamp));
        Ok((body, stamp))
    }
}

fn write_atomic(path: &Path, body: &str) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, body)?;
    fs::rename(&tmp, path)
}

fn check_limit(limit: usize) -> Result<(), ConceptNetError> {
    if limit == 0 || limit > MAX_EDGE_LIMIT {
        return Err(ConceptNetError::InvalidLimit(limit));
    }
    Ok(())
}

impl ConceptSource for ConceptNetClient {
    fn query(&self, term: &str, limit: usize) -> Result<ConceptQueryResult, ConceptNetError> {
        check_limit(limit)?;
        let term = normalize_word(term)?;
        let (body, fetched_at) = self.raw_response(&term, limit)?;
        let edges = parse_response(&term, &body, limit)?;
        Ok(ConceptQueryResult { term, edges, fetched_at })
    }
}

/// In-memory source answering from a fixed undirected edge list, in list order.
#[derive(Debug, Clone, Default)]
pub struct StaticConceptSource {
    edges: Vec<ConceptEdge>,
}

impl StaticConceptSource {
    pub fn new(edges: Vec<ConceptEdge>) -> Self {
        Self { edges }
    }

    /// Shorthand for `RelatedTo` edges of weight 1.
    pub fn related<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self::new(
            pairs
                .into_iter()
                .map(|(a, b)| ConceptEdge {
                    start_term: a.to_string(),
                    end_term: b.to_string(),
                    relation: "RelatedTo".to_string(),
                    weight: 1.0,
                })
                .collect(),
        )
    }

    pub fn edges(&self) -> &[ConceptEdge] {
        &self.edges
    }

    pub fn edges_for(&self, term: &str, limit: usize) -> Vec<ConceptEdge> {
        self.edges.iter().filter(|e| e.other_end(term).is_some()).take(limit).cloned().collect()
    }

    /// Writes one cached API response per term into `cache_dir/conceptnet/`,
    /// so an offline [`ConceptNetClient`] replays this source.
    pub fn write_cache<'a>(
        &self,
        cache_dir: &Path,
        terms: impl IntoIterator<Item = &'a str>,
        limit: usize,
    ) -> io::Result<()> {
        let dir = cache_dir.join("conceptnet");
        fs::create_dir_all(&dir)?;
        for term in terms {
            fs::write(dir.join(cache_file_name(term, limit)), render_response(term, &self.edges_for(term, limit)))?;
        }
        Ok(())
    }
}

impl ConceptSource for StaticConceptSource {
    fn query(&self, term: &str, limit: usize) -> Result<ConceptQueryResult, ConceptNetError> {
        check_limit(limit)?;
        let term = normalize_word(term)?;
        let edges = self.edges_for(&term, limit);
        Ok(ConceptQueryResult { term, edges, fetched_at: SystemTime::UNIX_EPOCH })
    }
}
