//! Token-level BERTScore between labels, single and multi-reference.
//!
//! cargo run --example bertscore

use topiclabel::evaluation::{bertscore_text, multi_reference_best};
use topiclabel::Embedder;

fn main() -> anyhow::Result<()> {
    let embedder = Embedder::test_hash();
    for (candidate, reference) in
        [("sport hockey", "sport hockey"), ("hockey", "sport hockey"), ("cloud", "cloud computing")]
    {
        let s = bertscore_text(candidate, reference, &embedder)?;
        println!("{candidate:>14} vs {reference:<16} P {:.3} R {:.3} F1 {:.3}", s.precision, s.recall, s.f1);
    }

    let references = ["conservative", "democrat", "democratic party (us)", "presidential nominee"];
    let (best, f1) = multi_reference_best("democrat", &references, |c, r| Ok(bertscore_text(c, r, &embedder)?.f1))?;
    println!("best reference for `democrat`: {} (F1 {f1:.3})", references[best]);
    Ok(())
}
