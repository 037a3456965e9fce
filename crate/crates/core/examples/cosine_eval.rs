//! Labels a few topics and scores them against their references by cosine.
//!
//! cargo run --example cosine_eval

use std::path::Path;

use topiclabel::datasets::{load_topics, DatasetFormat, DatasetSpec};
use topiclabel::evaluation::{cosine_eval, evaluate_corpus, EvalMode};
use topiclabel::{dsl, Embedder};

fn main() -> anyhow::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/topics.jsonl");
    let topics = load_topics(&DatasetSpec::new("sample", DatasetFormat::TopicsJsonl, path))?;
    let embedder = Embedder::test_hash();

    let results = topics.iter().map(|t| dsl(t, &embedder)).collect::<Result<Vec<_>, _>>()?;
    let report = evaluate_corpus(&results, &topics, EvalMode::Cosine, &embedder)?;
    print!("{}", report.to_table());

    println!("cosine(hockey, sport hockey) = {:.3}", cosine_eval("hockey", "sport hockey", &embedder)?);
    Ok(())
}
