//! Deterministic offline embedder.
//!
//! Component `i` of text `t` is `h(t ++ le32(i)) / 2^63 - 1`, where `h` is
//! FNV-1a 64 started from the state `0x544F504943`. The raw vector is then
//! L2-normalized. Every implementation of the format must agree bit for bit,
//! so the recipe is fixed here rather than configurable.

use std::hash::Hasher;

use fnv::FnvHasher;

use super::{EmbeddingBackend, EmbeddingError};

pub const HASH_DIM: usize = 64;
pub const HASH_SEED: u64 = 0x0054_4F50_4943;
pub const HASH_MODEL_ID: &str = "test-hash";

#[derive(Debug, Clone, Copy, Default)]
pub struct HashBackend;

impl HashBackend {
    pub fn embed_one(text: &str) -> Vec<f64> {
        let raw: Vec<f64> = (0..HASH_DIM as u32)
            .map(|i| {
                let mut hasher = FnvHasher::with_key(HASH_SEED);
                hasher.write(text.as_bytes());
                hasher.write(&i.to_le_bytes());
                hasher.finish() as f64 / 2f64.powi(63) - 1.0
            })
            .collect();
        let norm = super::l2_norm(&raw);
        raw.into_iter().map(|x| x / norm).collect()
    }
}

impl EmbeddingBackend for HashBackend {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        Ok(texts.iter().map(|t| Self::embed_one(t)).collect())
    }
}
