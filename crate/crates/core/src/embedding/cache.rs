//! Per-model embedding cache, optionally persisted to disk.
//!
//! On-disk layout, one file per model: a sequence of records
//! `u32 LE text length | text bytes | u32 LE dim | dim × f64 LE`.
//! The whole file is rewritten to a temporary sibling and renamed into place
//! on every flush.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use indexmap::IndexMap;
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};

use super::EmbeddingError;

pub(crate) struct EmbeddingCache {
    file: Option<PathBuf>,
    inner: RwLock<CacheState>,
}

#[derive(Default)]
struct CacheState {
    dim: Option<usize>,
    entries: IndexMap<String, Vec<f64>>,
    dirty: bool,
}

pub fn cache_file_path(cache_dir: &Path, model_id: &str) -> PathBuf {
    cache_dir.join("embeddings").join(format!("{}.emb", utf8_percent_encode(model_id, NON_ALPHANUMERIC)))
}

impl EmbeddingCache {
    pub fn in_memory() -> Self {
        Self { file: None, inner: RwLock::new(CacheState::default()) }
    }

    pub fn open(cache_dir: &Path, model_id: &str) -> Result<Self, EmbeddingError> {
        let file = cache_file_path(cache_dir, model_id);
        let mut state = CacheState::default();
        match fs::read(&file) {
            Ok(bytes) => {
                for (text, values) in decode_records(&bytes)? {
                    if *state.dim.get_or_insert(values.len()) != values.len() {
                        return Err(corrupt(&file, "records disagree on dimension"));
                    }
                    state.entries.insert(text, values);
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(EmbeddingError::Cache(e)),
        }
        Ok(Self { file: Some(file), inner: RwLock::new(state) })
    }

    pub fn get(&self, text: &str) -> Option<Vec<f64>> {
        self.inner.read().expect("cache lock").entries.get(text).cloned()
    }

    pub fn contains(&self, text: &str) -> bool {
        self.inner.read().expect("cache lock").entries.contains_key(text)
    }

    pub fn dim(&self) -> Option<usize> {
        self.inner.read().expect("cache lock").dim
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("cache lock").entries.len()
    }

    /// Inserts a batch; all vectors must match the dimension already held.
    pub fn insert_batch(&self, batch: Vec<(String, Vec<f64>)>) -> Result<(), EmbeddingError> {
        let mut state = self.inner.write().expect("cache lock");
        for (_, values) in &batch {
            let expected = *state.dim.get_or_insert(values.len());
            if expected != values.len() {
                return Err(EmbeddingError::DimMismatch { expected, actual: values.len() });
            }
        }
        for (text, values) in batch {
            state.entries.insert(text, values);
        }
        state.dirty = true;
        Ok(())
    }

    pub fn flush(&self) -> Result<(), EmbeddingError> {
        let Some(file) = &self.file else { return Ok(()) };
        let mut state = self.inner.write().expect("cache lock");
        if !state.dirty {
            return Ok(());
        }
        if let Some(parent) = file.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = file.with_extension("emb.tmp");
        {
            let mut out = io::BufWriter::new(fs::File::create(&tmp)?);
            for (text, values) in &state.entries {
                out.write_all(&(text.len() as u32).to_le_bytes())?;
                out.write_all(text.as_bytes())?;
                out.write_all(&(values.len() as u32).to_le_bytes())?;
                for v in values {
                    out.write_all(&v.to_le_bytes())?;
                }
            }
            out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        }
        fs::rename(&tmp, file)?;
        state.dirty = false;
        Ok(())
    }
}

fn corrupt(file: &Path, what: &str) -> EmbeddingError {
    EmbeddingError::Cache(io::Error::new(io::ErrorKind::InvalidData, format!("{}: {what}", file.display())))
}

fn decode_records(mut bytes: &[u8]) -> Result<Vec<(String, Vec<f64>)>, EmbeddingError> {
    fn read_u32(r: &mut &[u8]) -> io::Result<u32> {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)?;
        Ok(u32::from_le_bytes(buf))
    }
    let mut records = Vec::new();
    while !bytes.is_empty() {
        let len = read_u32(&mut bytes)? as usize;
        let mut text = vec![0u8; len];
        bytes.read_exact(&mut text)?;
        let text = String::from_utf8(text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        let dim = read_u32(&mut bytes)? as usize;
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            let mut buf = [0u8; 8];
            bytes.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        records.push((text, values));
    }
    Ok(records)
}
