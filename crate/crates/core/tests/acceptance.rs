//! Acceptance suite: one `[PASS]`/`[FAIL]`/`[SKIP]` line per criterion.
//!
//! Criteria 7 and 8 need a live embedding server and the full corpora; they
//! run only when the environment variables below are set.
//!
//! * `TOPICLABEL_EMBED_URL`: embedding server base URL
//! * `TOPICLABEL_20NG_TSV`: the 20 Newsgroups topic table (criterion 7)
//! * `TOPICLABEL_BHATIA_CSV`, `TOPICLABEL_BHATIA_SCORES`: the Bhatia corpus
//!   and external BERTScore results for its DSL pairs (criterion 8)
//! * `TOPICLABEL_CACHE_DIR`: optional ConceptNet / embedding cache

mod common;

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use proptest::prelude::*;
use proptest::sample::Index;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use common::{argmax, cos, hash_oracle, SERVER_SEEDS};
use topiclabel::conceptnet::ConceptNetClient;
use topiclabel::datasets::{self, DatasetFormat, DatasetSpec};
use topiclabel::evaluation::{
    self, bertscore_text, cosine_eval, multi_reference_best, token_bertscore, EvalMode, ScoresFile,
};
use topiclabel::graph::{candidate_nodes, connected_components, expand_graph_traced, StopReason};
use topiclabel::{
    build_sentence, dsl, expand_graph, gel, ConceptNetConfig, Embedder, EmbedderConfig, EmbeddingVector,
    ExpansionConfig, KnowledgeGraph, StaticConceptSource, Topic,
};

fn runner() -> TestRunner {
    let config = Config { failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn sample<S: Strategy>(strategy: &S, runner: &mut TestRunner) -> S::Value {
    strategy.new_tree(runner).expect("strategy yields a value").current()
}

fn no_refs() -> [&'static str; 0] {
    []
}

/// A random undirected graph over a random vocabulary, with distinct seeds.
#[derive(Debug, Clone)]
struct Fixture {
    seeds: Vec<String>,
    source: StaticConceptSource,
}

fn fixture_strategy() -> impl Strategy<Value = Fixture> {
    (
        prop::collection::btree_set("[a-z]{3,8}( [a-z]{3,6})?", 8..40),
        prop::collection::vec((any::<Index>(), any::<Index>()), 5..80),
        prop::collection::vec(any::<Index>(), 2..6),
    )
        .prop_map(|(vocab, edges, seeds)| {
            let vocab: Vec<String> = vocab.into_iter().collect();
            let pairs: Vec<(&str, &str)> = edges
                .iter()
                .map(|(a, b)| (vocab[a.index(vocab.len())].as_str(), vocab[b.index(vocab.len())].as_str()))
                .filter(|(a, b)| a != b)
                .collect();
            let mut picked = Vec::new();
            for s in &seeds {
                let term = vocab[s.index(vocab.len())].clone();
                if !picked.contains(&term) {
                    picked.push(term);
                }
            }
            Fixture { seeds: picked, source: StaticConceptSource::related(pairs) }
        })
}

fn servers_client() -> ConceptNetClient {
    ConceptNetClient::new(ConceptNetConfig::offline(common::fixtures().join("cache")))
}

/// Candidate order rebuilt from the node list: hop, then term.
fn oracle_candidates(graph: &KnowledgeGraph) -> Vec<String> {
    let mut nodes: Vec<(usize, String)> = graph.nodes().map(|n| (n.hop, n.term.clone())).collect();
    nodes.sort();
    nodes.into_iter().map(|(_, t)| t).collect()
}

fn brute_force(sentence: &str, candidates: &[String]) -> (usize, f64) {
    let t = hash_oracle(sentence);
    let scores: Vec<f64> = candidates.iter().map(|c| cos(&t, &hash_oracle(c))).collect();
    let i = argmax(&scores);
    (i, scores[i])
}

fn criterion_1() -> Result<String> {
    let strategy = prop::collection::vec("[A-Za-z0-9]{1,10}", 2..=15);
    let mut rng = runner();
    let topics: Vec<Vec<String>> = (0..1000).map(|_| sample(&strategy, &mut rng)).collect();
    let embedder = Embedder::test_hash();
    let start = Instant::now();
    let mut agree = 0;
    for (i, words) in topics.iter().enumerate() {
        let topic = Topic::new(format!("t{i}"), words, no_refs())?;
        let result = dsl(&topic, &embedder)?;
        let lower: Vec<String> = words.iter().map(|w| w.to_ascii_lowercase()).collect();
        let (best, score) = brute_force(&lower.join(", "), &lower);
        ensure!(result.label == lower[best], "topic {words:?}: got {} expected {}", result.label, lower[best]);
        ensure!((result.score - score).abs() < 1e-12, "topic {words:?}: score {} vs {score}", result.score);
        agree += 1;
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("{agree}/{} topics agree with brute force in {elapsed:.2?}", topics.len()))
}

fn check_gel(topic: &Topic, source: &dyn topiclabel::ConceptSource, embedder: &Embedder) -> Result<()> {
    let config = ExpansionConfig::default();
    let result = gel(topic, embedder, &config, source)?;
    let graph = expand_graph(topic.words(), &config, source)?;
    let candidates = oracle_candidates(&graph);
    ensure!(candidate_nodes(&graph) == candidates, "candidate order differs");
    let (best, score) = brute_force(&topic.words().join(", "), &candidates);
    ensure!(result.label == candidates[best], "{}: got {} expected {}", topic.id(), result.label, candidates[best]);
    ensure!((result.score - score).abs() < 1e-12, "{}: score {} vs {score}", topic.id(), result.score);
    ensure!(result.candidates.len() == candidates.len(), "{}: candidate count", topic.id());
    Ok(())
}

fn criterion_2() -> Result<String> {
    let embedder = Embedder::test_hash();
    let servers = Topic::new("servers", SERVER_SEEDS, no_refs())?;
    check_gel(&servers, &servers_client(), &embedder)?;
    let mut rng = runner();
    let strategy = fixture_strategy();
    let mut count = 1;
    for i in 0..24 {
        let fx = sample(&strategy, &mut rng);
        let topic = Topic::new(format!("g{i}"), &fx.seeds, no_refs())?;
        check_gel(&topic, &fx.source, &embedder)?;
        count += 1;
    }
    Ok(format!("{count}/{count} graph fixtures agree with brute force"))
}

fn criterion_3() -> Result<String> {
    let topic = Topic::new(
        "obama",
        ["obama", "mccain", "campaign", "john", "barack", "president", "senator", "candidate", "convention", "clinton"],
        no_refs(),
    )?;
    let expected = "obama, mccain, campaign, john, barack, president, senator, candidate, convention, clinton";
    let got = build_sentence(&topic);
    ensure!(got.as_str().as_bytes() == expected.as_bytes(), "got {got:?}");
    Ok(format!("{expected:?}"))
}

fn criterion_4() -> Result<String> {
    let client = servers_client();
    let (graph, trace) = expand_graph_traced(SERVER_SEEDS, &ExpansionConfig::default(), &client)?;
    let components = connected_components(&graph).len();
    ensure!(components == 1, "servers: {components} components");
    ensure!(trace.stop == StopReason::SeedsConnected && trace.rounds <= 3, "servers: {trace:?}");
    ensure!(client.request_count() == 0, "offline client went to the network");
    let again = expand_graph(SERVER_SEEDS, &ExpansionConfig::default(), &servers_client())?;
    ensure!(graph.to_json() == again.to_json(), "servers export differs between runs");

    let mut rng = runner();
    let strategy = (fixture_strategy(), 1usize..40);
    let fixtures = 60;
    for _ in 0..fixtures {
        let (fx, cap) = sample(&strategy, &mut rng);
        let mut previous: Option<BTreeSet<String>> = None;
        for hops in 1..=4 {
            let config = ExpansionConfig { max_hops: hops, stop_when_connected: false, ..ExpansionConfig::default() };
            let g = expand_graph(&fx.seeds, &config, &fx.source)?;
            ensure!(g.nodes().all(|n| n.hop <= hops), "hop label above {hops}");
            let nodes: BTreeSet<String> = g.nodes().map(|n| n.term.clone()).collect();
            if let Some(prev) = &previous {
                ensure!(prev.is_subset(&nodes), "{:?}: nodes at {} hops not kept at {hops}", fx.seeds, hops - 1);
            }
            previous = Some(nodes);

            let connected = ExpansionConfig { max_hops: hops, ..ExpansionConfig::default() };
            let g2 = expand_graph(&fx.seeds, &connected, &fx.source)?;
            let g2_again = expand_graph(&fx.seeds, &connected, &fx.source.clone())?;
            ensure!(g2.to_json() == g2_again.to_json(), "export differs between runs");
        }

        let cap = cap.max(fx.seeds.len());
        let full = expand_graph(&fx.seeds, &ExpansionConfig::default(), &fx.source)?;
        let capped =
            expand_graph(&fx.seeds, &ExpansionConfig { max_nodes: cap, ..ExpansionConfig::default() }, &fx.source)?;
        ensure!(capped.node_count() <= cap, "cap {cap} exceeded: {}", capped.node_count());
        let full_terms: Vec<&str> = full.nodes().map(|n| n.term.as_str()).collect();
        let capped_terms: Vec<&str> = capped.nodes().map(|n| n.term.as_str()).collect();
        let keep = cap.min(full_terms.len());
        ensure!(capped_terms == full_terms[..keep], "capped graph is not a prefix of the full discovery order");
    }
    Ok(format!("server seeds join in {} rounds; {fixtures} random fixtures monotone, capped and stable", trace.rounds))
}

fn vectors(rows: &[Vec<f64>]) -> Vec<EmbeddingVector> {
    rows.iter().map(|r| EmbeddingVector::new(r.clone(), "m").unwrap()).collect()
}

fn double_loop(c: &[Vec<f64>], r: &[Vec<f64>]) -> (f64, f64, f64) {
    let mut p = 0.0;
    for ci in c {
        let mut best = f64::NEG_INFINITY;
        for rj in r {
            best = best.max(cos(ci, rj));
        }
        p += best;
    }
    p /= c.len() as f64;
    let mut rec = 0.0;
    for rj in r {
        let mut best = f64::NEG_INFINITY;
        for ci in c {
            best = best.max(cos(ci, rj));
        }
        rec += best;
    }
    rec /= r.len() as f64;
    let f = if p + rec == 0.0 { 0.0 } else { 2.0 * p * rec / (p + rec) };
    (p, rec, f)
}

fn criterion_5() -> Result<String> {
    let nonzero = |v: &Vec<f64>| v.iter().map(|x| x * x).sum::<f64>() > 1e-6;
    let strategy = (1usize..=8).prop_flat_map(move |d| {
        let row = prop::collection::vec(-1.0f64..1.0, d).prop_filter("zero vector", nonzero);
        (prop::collection::vec(row.clone(), 1..=6), prop::collection::vec(row, 1..=6))
    });
    let mut rng = runner();
    let cases = 500;
    for _ in 0..cases {
        let (c, r) = sample(&strategy, &mut rng);
        let got = token_bertscore(&vectors(&c), &vectors(&r))?;
        let (p, rec, f) = double_loop(&c, &r);
        ensure!((got.precision - p).abs() <= 1e-9, "precision {} vs {p}", got.precision);
        ensure!((got.recall - rec).abs() <= 1e-9, "recall {} vs {rec}", got.recall);
        ensure!((got.f1 - f).abs() <= 1e-9, "f1 {} vs {f}", got.f1);

        let swapped = token_bertscore(&vectors(&r), &vectors(&c))?;
        ensure!(swapped.precision.to_bits() == got.recall.to_bits(), "swap: precision vs recall");
        ensure!(swapped.recall.to_bits() == got.precision.to_bits(), "swap: recall vs precision");
        ensure!(swapped.f1.to_bits() == got.f1.to_bits(), "swap: f1");
        let harmonic = 2.0 * got.precision * got.recall / (got.precision + got.recall);
        ensure!(got.f1.to_bits() == harmonic.to_bits(), "f1 is not the harmonic mean");
    }

    let embedder = Embedder::test_hash();
    let labels = prop::collection::vec("[a-z]{2,9}", 1..=4).prop_map(|w| w.join(" "));
    let mut identical = 0;
    for _ in 0..200 {
        let label = sample(&labels, &mut rng);
        let s = bertscore_text(&label, &label, &embedder)?;
        ensure!((s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0), "{label:?} scored {s:?}");
        identical += 1;
    }
    Ok(format!("{cases} random cases within 1e-9, swaps exact; {identical} identical strings score (1,1,1)"))
}

fn criterion_6() -> Result<String> {
    let embedder = Embedder::test_hash();
    let label = prop::collection::vec("[a-z]{2,8}", 1..=3).prop_map(|w| w.join(" "));
    let strategy = (label.clone(), prop::collection::vec(label, 1..=8));
    let mut rng = runner();
    let cases = 300;
    for _ in 0..cases {
        let (candidate, refs) = sample(&strategy, &mut rng);
        let f1s: Vec<f64> =
            refs.iter().map(|r| Ok(bertscore_text(&candidate, r, &embedder)?.f1)).collect::<Result<_>>()?;
        let cosines: Vec<f64> = refs.iter().map(|r| cosine_eval(&candidate, r, &embedder)).collect::<Result<_, _>>()?;
        for (name, individual) in [("bertscore", &f1s), ("cosine", &cosines)] {
            let (i, best) = match name {
                "bertscore" => multi_reference_best(&candidate, &refs, |c, r| Ok(bertscore_text(c, r, &embedder)?.f1))?,
                _ => multi_reference_best(&candidate, &refs, |c, r| cosine_eval(c, r, &embedder))?,
            };
            let max = individual.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ensure!(best.to_bits() == max.to_bits(), "{name}: best {best} vs max {max}");
            ensure!(individual.iter().position(|&s| s == max) == Some(i), "{name}: index {i} is not the first maximum");
        }
    }
    Ok(format!("{cases} random reference sets, bertscore and cosine"))
}

fn env_path(name: &str) -> Option<PathBuf> {
    std::env::var_os(name).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn cache_dir() -> Option<PathBuf> {
    env_path("TOPICLABEL_CACHE_DIR")
}

fn http_embedder(model: &str) -> Result<Embedder> {
    let url = std::env::var("TOPICLABEL_EMBED_URL").context("TOPICLABEL_EMBED_URL")?;
    let config = EmbedderConfig { cache_dir: cache_dir(), ..EmbedderConfig::http(url, model) };
    Ok(Embedder::from_config(&config)?)
}

fn within(name: &str, got: f64, target: f64, tol: f64) -> Result<String> {
    let line = format!("{name} {got:.3} (target {target} ± {tol})");
    ensure!((got - target).abs() <= tol, "{line}");
    Ok(line)
}

fn criterion_7() -> Result<String> {
    let path = env_path("TOPICLABEL_20NG_TSV").context("TOPICLABEL_20NG_TSV")?;
    let topics = datasets::load_topics(&DatasetSpec::new("20ng", DatasetFormat::NewsgroupsTsv, path))?;

    let embedder = http_embedder("all-MiniLM-L12-v2")?;
    let results = topics.iter().map(|t| dsl(t, &embedder)).collect::<Result<Vec<_>, _>>()?;
    let report = evaluation::evaluate_corpus(&results, &topics, EvalMode::Cosine, &embedder)?;
    let dsl_line = within("DSL cosine", report.mean_cosine.unwrap_or(f64::NAN), 0.578, 0.03);

    let embedder = http_embedder("GIST-all-MiniLM-L6-v2")?;
    let client = ConceptNetClient::new(
        ConceptNetConfig { cache_dir: cache_dir(), ..ConceptNetConfig::default() }.with_env_overrides(),
    );
    let config = ExpansionConfig::default();
    let results = topics.iter().map(|t| gel(t, &embedder, &config, &client)).collect::<Result<Vec<_>, _>>()?;
    let report = evaluation::evaluate_corpus(&results, &topics, EvalMode::Cosine, &embedder)?;
    let gel_line = within("GEL cosine", report.mean_cosine.unwrap_or(f64::NAN), 0.627, 0.03);

    match (dsl_line, gel_line) {
        (Ok(a), Ok(b)) => Ok(format!("{a}; {b}")),
        (a, b) => bail!("{}; {}", a.unwrap_or_else(|e| e.to_string()), b.unwrap_or_else(|e| e.to_string())),
    }
}

fn criterion_8() -> Result<String> {
    let path = env_path("TOPICLABEL_BHATIA_CSV").context("TOPICLABEL_BHATIA_CSV")?;
    let scores_path = env_path("TOPICLABEL_BHATIA_SCORES").context("TOPICLABEL_BHATIA_SCORES")?;
    let topics = datasets::load_topics(&DatasetSpec::new("bhatia", DatasetFormat::BhatiaCsv, path))?;
    let embedder = http_embedder("all-MiniLM-L6-v2")?;
    let results = topics.iter().map(|t| dsl(t, &embedder)).collect::<Result<Vec<_>, _>>()?;
    let scores: ScoresFile = serde_json::from_str(&std::fs::read_to_string(&scores_path)?)?;
    let report = evaluation::evaluate_external(&results, &topics, &scores)?;
    within("DSL BERTScore F1", report.mean_f1.unwrap_or(f64::NAN), 0.955, 0.01)
}

type Criterion = (u32, &'static str, fn() -> Result<String>);

#[derive(PartialEq)]
enum Status {
    Pass,
    Fail,
    Skip,
}

fn run(n: u32, title: &str, f: fn() -> Result<String>) -> Status {
    let outcome = panic::catch_unwind(AssertUnwindSafe(f));
    let (status, detail) = match outcome {
        Ok(Ok(detail)) => (Status::Pass, detail),
        Ok(Err(e)) => (Status::Fail, format!("{e:#}")),
        Err(p) => (Status::Fail, p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())),
    };
    let tag = if status == Status::Pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {n}: {title}: {detail}");
    status
}

fn skip(n: u32, title: &str, needs: &str) -> Status {
    println!("[SKIP] criterion {n}: {title}: set {needs}");
    Status::Skip
}

fn has_env(names: &[&str]) -> bool {
    names.iter().all(|n| std::env::var_os(n).is_some_and(|v| !v.is_empty()))
}

fn main() -> ExitCode {
    let mut statuses = Vec::new();
    let offline: [Criterion; 6] = [
        (1, "direct labeling matches brute-force argmax", criterion_1),
        (2, "graph labeling matches brute-force argmax", criterion_2),
        (3, "topic sentence is byte-exact", criterion_3),
        (4, "graph expansion properties", criterion_4),
        (5, "token BERTScore matches the double-loop oracle", criterion_5),
        (6, "multi-reference best equals the max", criterion_6),
    ];
    let start = Instant::now();
    for (n, title, f) in offline {
        statuses.push(run(n, title, f));
    }
    let elapsed = start.elapsed();

    let needs_7 = ["TOPICLABEL_EMBED_URL", "TOPICLABEL_20NG_TSV"];
    statuses.push(if has_env(&needs_7) {
        run(7, "20 Newsgroups cosine means", criterion_7)
    } else {
        skip(7, "20 Newsgroups cosine means", &needs_7.join(", "))
    });
    let needs_8 = ["TOPICLABEL_EMBED_URL", "TOPICLABEL_BHATIA_CSV", "TOPICLABEL_BHATIA_SCORES"];
    // Best effort: reported, but a miss does not fail the suite.
    if has_env(&needs_8) {
        run(8, "Bhatia BERTScore F1 (best effort, not counted)", criterion_8);
    } else {
        skip(8, "Bhatia BERTScore F1 (best effort)", &needs_8.join(", "));
    }

    let offline_ok = statuses[..6].iter().all(|s| *s == Status::Pass);
    let fast = elapsed < Duration::from_secs(60);
    let tag = if offline_ok && fast { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion 9: offline criteria 1-6 without network or model backend: {elapsed:.2?}");
    if !(offline_ok && fast) {
        statuses.push(Status::Fail);
    }

    if statuses.contains(&Status::Fail) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
