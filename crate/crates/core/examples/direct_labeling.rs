//! Labels the bundled 20 Newsgroups sample with the topic word closest to
//! each topic sentence.
//!
//! Uses the deterministic hash embedder unless `TOPICLABEL_EMBED_URL` points
//! at an embedding server.
//!
//! cargo run --example direct_labeling

use std::path::Path;

use topiclabel::datasets::{load_topics, DatasetFormat, DatasetSpec};
use topiclabel::{dsl, Embedder, EmbedderConfig};

fn main() -> anyhow::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/newsgroups.tsv");
    let topics = load_topics(&DatasetSpec::new("20ng", DatasetFormat::NewsgroupsTsv, path))?;
    let embedder = match std::env::var("TOPICLABEL_EMBED_URL") {
        Ok(url) => Embedder::from_config(&EmbedderConfig::http(url, "all-MiniLM-L12-v2"))?,
        Err(_) => Embedder::test_hash(),
    };
    println!("embedder: {}", embedder.model_id());
    for topic in &topics {
        let result = dsl(topic, &embedder)?;
        println!("{:<22} -> {:<12} {:.3}", topic.id(), result.label, result.score);
    }
    Ok(())
}
