//! Knowledge-graph construction by breadth-first ConceptNet expansion.
//!
//! Seeds sit at hop 0. Round `k` queries every node first discovered at hop
//! `k - 1` and places newly seen endpoints at hop `k`, so after `max_hops`
//! rounds the deepest nodes have hop `max_hops`. Expansion stops early once
//! all seeds share a component (when asked to) or the node cap is reached.
//! Edges are treated as undirected throughout.

use std::collections::{BTreeMap, HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conceptnet::{ConceptEdge, ConceptNetError, ConceptSource, StaticConceptSource};
use crate::types::{normalize_word, TopicError};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no seed terms")]
    EmptySeeds,
    #[error("invalid seed: {0}")]
    InvalidSeed(#[from] TopicError),
    #[error("invalid expansion config: {0}")]
    InvalidConfig(String),
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error(transparent)]
    Source(#[from] ConceptNetError),
    #[error("graph json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub max_hops: usize,
    pub per_term_edge_limit: usize,
    pub max_nodes: usize,
    pub stop_when_connected: bool,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self { max_hops: 3, per_term_edge_limit: 50, max_nodes: 5000, stop_when_connected: true }
    }
}

impl ExpansionConfig {
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.max_hops == 0 {
            return Err(GraphError::InvalidConfig("max_hops must be at least 1".into()));
        }
        if self.per_term_edge_limit == 0 {
            return Err(GraphError::InvalidConfig("per_term_edge_limit must be positive".into()));
        }
        if self.max_nodes == 0 {
            return Err(GraphError::InvalidConfig("max_nodes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub term: String,
    pub hop: usize,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: String,
    pub b: String,
    pub rel: String,
    pub weight: f64,
}

impl GraphEdge {
    fn key(&self) -> (String, String, String) {
        let (lo, hi) = if self.a <= self.b { (&self.a, &self.b) } else { (&self.b, &self.a) };
        (lo.clone(), hi.clone(), self.rel.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeGraph {
    seeds: Vec<String>,
    nodes: IndexMap<String, NodeInfo>,
    edges: Vec<GraphEdge>,
    edge_keys: HashSet<(String, String, String)>,
}

/// JSON layout of an exported graph; also the committed-fixture format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub seeds: Vec<String>,
    pub nodes: Vec<NodeInfo>,
    pub edges: Vec<GraphEdge>,
}

impl KnowledgeGraph {
    fn with_seeds(seeds: Vec<String>) -> Self {
        let mut graph = Self::default();
        for seed in &seeds {
            graph.nodes.insert(seed.clone(), NodeInfo { term: seed.clone(), hop: 0, degree: 0 });
        }
        graph.seeds = seeds;
        graph
    }

    pub fn seeds(&self) -> &[String] {
        &self.seeds
    }

    /// Nodes in discovery order.
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &NodeInfo> {
        self.nodes.values()
    }

    pub fn node(&self, term: &str) -> Option<&NodeInfo> {
        self.nodes.get(term)
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn add_edge(&mut self, edge: GraphEdge) {
        if edge.a == edge.b {
            return;
        }
        if self.edge_keys.insert(edge.key()) {
            self.edges.push(edge);
        }
    }

    fn refresh_degrees(&mut self) {
        for node in self.nodes.values_mut() {
            node.degree = 0;
        }
        for edge in &self.edges {
            for end in [&edge.a, &edge.b] {
                if let Some(node) = self.nodes.get_mut(end) {
                    node.degree += 1;
                }
            }
        }
    }

    /// True when every seed lies in one undirected component.
    pub fn seeds_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.nodes.len());
        for edge in &self.edges {
            uf.union(self.index(&edge.a), self.index(&edge.b));
        }
        let mut roots = self.seeds.iter().map(|s| uf.find(self.index(s)));
        match roots.next() {
            Some(first) => roots.all(|r| r == first),
            None => true,
        }
    }

    fn index(&self, term: &str) -> usize {
        self.nodes.get_index_of(term).expect("edge endpoints are nodes")
    }

    pub fn to_export(&self) -> GraphExport {
        GraphExport {
            seeds: self.seeds.clone(),
            nodes: candidate_nodes(self).into_iter().map(|t| self.nodes[&t].clone()).collect(),
            edges: self.edges.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_export()).expect("graph export serializes")
    }

    /// Rebuilds a graph from an export, checking its invariants.
    pub fn from_export(export: GraphExport) -> Result<Self, GraphError> {
        let mut graph = Self { seeds: export.seeds, ..Self::default() };
        for node in export.nodes {
            if graph.nodes.contains_key(&node.term) {
                return Err(GraphError::Invalid(format!("duplicate node `{}`", node.term)));
            }
            graph.nodes.insert(node.term.clone(), node);
        }
        for seed in &graph.seeds {
            match graph.nodes.get(seed) {
                Some(n) if n.hop == 0 => {}
                _ => return Err(GraphError::Invalid(format!("seed `{seed}` missing or not at hop 0"))),
            }
        }
        let seed_set: HashSet<&String> = graph.seeds.iter().collect();
        if let Some(n) = graph.nodes.values().find(|n| n.hop == 0 && !seed_set.contains(&n.term)) {
            return Err(GraphError::Invalid(format!("non-seed `{}` at hop 0", n.term)));
        }
        for edge in export.edges {
            if edge.a == edge.b {
                return Err(GraphError::Invalid(format!("self loop on `{}`", edge.a)));
            }
            if !graph.nodes.contains_key(&edge.a) || !graph.nodes.contains_key(&edge.b) {
                return Err(GraphError::Invalid(format!("edge {} - {} has a missing endpoint", edge.a, edge.b)));
            }
            graph.add_edge(edge);
        }
        graph.refresh_degrees();
        Ok(graph)
    }

    pub fn from_json(json: &str) -> Result<Self, GraphError> {
        Self::from_export(serde_json::from_str(json)?)
    }

    /// A concept source that answers from this graph's edges.
    pub fn as_source(&self) -> StaticConceptSource {
        StaticConceptSource::new(
            self.edges
                .iter()
                .map(|e| ConceptEdge {
                    start_term: e.a.clone(),
                    end_term: e.b.clone(),
                    relation: e.rel.clone(),
                    weight: e.weight,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    HopLimit,
    SeedsConnected,
    NodeCap,
    FrontierExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryRecord {
    pub round: usize,
    pub term: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionTrace {
    pub queries: Vec<QueryRecord>,
    pub rounds: usize,
    pub stop: StopReason,
}

pub fn expand_graph<S, I>(
    seeds: I,
    config: &ExpansionConfig,
    source: &dyn ConceptSource,
) -> Result<KnowledgeGraph, GraphError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    expand_graph_traced(seeds, config, source).map(|(g, _)| g)
}

/// As [`expand_graph`], also returning the query log and why expansion stopped.
pub fn expand_graph_traced<S, I>(
    seeds: I,
    config: &ExpansionConfig,
    source: &dyn ConceptSource,
) -> Result<(KnowledgeGraph, ExpansionTrace), GraphError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    config.validate()?;
    let mut unique = Vec::new();
    for seed in seeds {
        let seed = normalize_word(seed.as_ref())?;
        if !unique.contains(&seed) {
            unique.push(seed);
        }
    }
    if unique.is_empty() {
        return Err(GraphError::EmptySeeds);
    }
    if unique.len() > config.max_nodes {
        return Err(GraphError::InvalidConfig(format!(
            "{} seeds exceed max_nodes = {}",
            unique.len(),
            config.max_nodes
        )));
    }

    let mut graph = KnowledgeGraph::with_seeds(unique.clone());
    let mut frontier = unique;
    let mut queries = Vec::new();
    let mut rounds = 0;
    let mut stop = StopReason::HopLimit;

    'rounds: for round in 1..=config.max_hops {
        if frontier.is_empty() {
            stop = StopReason::FrontierExhausted;
            break;
        }
        rounds = round;
        let mut next = Vec::new();
        for term in &frontier {
            queries.push(QueryRecord { round, term: term.clone() });
            let result = source.query(term, config.per_term_edge_limit)?;
            for edge in result.edges {
                let Some(other) = edge.other_end(term) else { continue };
                if other == term {
                    continue;
                }
                if !graph.nodes.contains_key(other) {
                    if graph.nodes.len() >= config.max_nodes {
                        stop = StopReason::NodeCap;
                        break 'rounds;
                    }
                    let other = other.to_string();
                    graph.nodes.insert(other.clone(), NodeInfo { term: other.clone(), hop: round, degree: 0 });
                    next.push(other);
                }
                graph.add_edge(GraphEdge {
                    a: edge.start_term,
                    b: edge.end_term,
                    rel: edge.relation,
                    weight: edge.weight,
                });
            }
        }
        if config.stop_when_connected && graph.seeds_connected() {
            stop = StopReason::SeedsConnected;
            break;
        }
        frontier = next;
    }

    graph.refresh_degrees();
    log::debug!(
        "expanded {} seeds to {} nodes / {} edges in {rounds} rounds ({stop:?})",
        graph.seeds.len(),
        graph.node_count(),
        graph.edge_count()
    );
    Ok((graph, ExpansionTrace { queries, rounds, stop }))
}

/// Undirected components, members sorted, components ordered by smallest member.
pub fn connected_components(graph: &KnowledgeGraph) -> Vec<Vec<String>> {
    let mut uf = UnionFind::new(graph.nodes.len());
    for edge in &graph.edges {
        uf.union(graph.index(&edge.a), graph.index(&edge.b));
    }
    let mut groups: HashMap<usize, Vec<String>> = HashMap::new();
    for (i, term) in graph.nodes.keys().enumerate() {
        groups.entry(uf.find(i)).or_default().push(term.clone());
    }
    let mut components: Vec<Vec<String>> = groups
        .into_values()
        .map(|mut members| {
            members.sort();
            members
        })
        .collect();
    components.sort_by(|a, b| a[0].cmp(&b[0]));
    components
}

/// Every node term once, ordered by hop then lexicographically.
pub fn candidate_nodes(graph: &KnowledgeGraph) -> Vec<String> {
    let mut by_hop: BTreeMap<usize, Vec<&String>> = BTreeMap::new();
    for node in graph.nodes.values() {
        by_hop.entry(node.hop).or_default().push(&node.term);
    }
    by_hop
        .into_values()
        .flat_map(|mut terms| {
            terms.sort();
            terms.into_iter().cloned()
        })
        .collect()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
