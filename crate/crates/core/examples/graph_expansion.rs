//! Grows a graph from four seeds, prints it round by round, and exports it.
//!
//! cargo run --example graph_expansion [-- out.json]

use std::path::Path;

use topiclabel::graph::{candidate_nodes, connected_components, expand_graph_traced};
use topiclabel::{ConceptNetClient, ConceptNetConfig, ExpansionConfig, StaticConceptSource};

fn main() -> anyhow::Result<()> {
    let seeds = ["server", "virtualization", "infrastructure", "virtual"];
    let cache = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cache");
    let client = ConceptNetClient::new(ConceptNetConfig::offline(cache));

    for hops in 1..=2 {
        let config = ExpansionConfig { max_hops: hops, ..ExpansionConfig::default() };
        let (graph, trace) = expand_graph_traced(seeds, &config, &client)?;
        println!(
            "max_hops {hops}: {} nodes, {} edges, {} components, stop: {:?}",
            graph.node_count(),
            graph.edge_count(),
            connected_components(&graph).len(),
            trace.stop
        );
    }

    let (graph, _) = expand_graph_traced(seeds, &ExpansionConfig::default(), &client)?;
    println!("candidates: {}", candidate_nodes(&graph).join(", "));
    if let Some(out) = std::env::args().nth(1) {
        std::fs::write(&out, graph.to_json())?;
        println!("wrote {out}");
    }

    // The same machinery over an in-memory edge list.
    let toy = StaticConceptSource::related([("cat", "pet"), ("dog", "pet"), ("pet", "animal")]);
    let (g, trace) = expand_graph_traced(["cat", "dog"], &ExpansionConfig::default(), &toy)?;
    println!("toy: {} nodes after {} rounds ({:?})", g.node_count(), trace.rounds, trace.stop);
    Ok(())
}
