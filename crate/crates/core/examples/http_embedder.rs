//! Embeds a topic sentence through an embedding server and caches the result.
//!
//! TOPICLABEL_EMBED_URL=http://localhost:8000 cargo run --example http_embedder [-- model]

use topiclabel::{build_sentence, Embedder, EmbedderConfig, Topic};

fn main() -> anyhow::Result<()> {
    let Ok(url) = std::env::var("TOPICLABEL_EMBED_URL") else {
        eprintln!("set TOPICLABEL_EMBED_URL to an embedding server");
        std::process::exit(2);
    };
    let model = std::env::args().nth(1).unwrap_or_else(|| "all-MiniLM-L12-v2".to_string());
    let cache = std::env::temp_dir().join("topiclabel-example-cache");
    let config = EmbedderConfig { cache_dir: Some(cache.clone()), ..EmbedderConfig::http(url, model) };
    let embedder = Embedder::from_config(&config)?;

    let topic = Topic::new("hockey", ["game", "team", "play", "hockey", "player"], ["sport hockey"])?;
    let v = embedder.embed_topic(&topic)?;
    println!("{:?} -> {} dims", build_sentence(&topic).as_str(), v.dim());
    println!("first values: {:?}", &v.values()[..v.dim().min(5)]);
    println!("cached under {}", cache.display());
    Ok(())
}
