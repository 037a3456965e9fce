//! Graph-enhanced labeling from the committed ConceptNet responses, with no
//! network access.
//!
//! cargo run --example graph_labeling

use std::path::Path;

use topiclabel::{gel, ConceptNetClient, ConceptNetConfig, Embedder, ExpansionConfig, Topic};

fn main() -> anyhow::Result<()> {
    let cache = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cache");
    let client = ConceptNetClient::new(ConceptNetConfig::offline(cache));
    let topic = Topic::new("servers", ["server", "virtualization", "infrastructure", "virtual"], ["virtualization"])?;
    let embedder = Embedder::test_hash();

    let result = gel(&topic, &embedder, &ExpansionConfig::default(), &client)?;
    println!("label: {} ({:.3})", result.label, result.score);
    println!("top candidates:");
    for c in result.candidates.iter().take(8) {
        println!("  {:<16} {:.3}", c.text, c.score);
    }
    Ok(())
}
