//! Converts the bundled Bhatia-style CSV sample to topics JSONL and prints
//! its validation report.
//!
//! cargo run --example datasets

use std::path::Path;

use topiclabel::datasets::{load_topics, to_jsonl, validate_bhatia, DatasetFormat, DatasetSpec};

fn main() -> anyhow::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bhatia_sample.csv");
    let topics = load_topics(&DatasetSpec::new("bhatia", DatasetFormat::BhatiaCsv, path))?;
    print!("{}", to_jsonl(&topics));
    println!("{}", serde_json::to_string_pretty(&validate_bhatia(&topics))?);
    Ok(())
}
