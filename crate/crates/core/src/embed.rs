//! Query/sentence embedders. The hashed bag-of-words embedder gives a
//! deterministic offline stand-in for a pretrained sentence encoder.

use crate::dataset::McqaSample;
use crate::error::Result;
use crate::query::{query_id, query_text, QueryKind, QueryMode};
use crate::store::{EmbeddingStore, EmbeddingVector};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Signed feature hashing: each token adds ±1 to bucket `hash % dim`, the
/// sign taken from bit 63. The sum is L2-normalized unless it is all zero.
pub fn mock_embed(text: &str, dim: usize) -> EmbeddingVector {
    assert!(dim > 0, "mock_embed: dim must be positive");
    let mut acc = vec![0.0f64; dim];
    for token in tokenize(text) {
        let h = fnv1a64(token.as_bytes());
        let bucket = (h % dim as u64) as usize;
        acc[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    let values = if norm > 0.0 {
        acc.iter().map(|v| (v / norm) as f32).collect()
    } else {
        vec![0.0; dim]
    };
    EmbeddingVector::new(values).expect("hashed counts are finite")
}

/// Produces the query-side embedding for a sample under a query mode.
pub trait QueryEmbedder {
    fn dim(&self) -> usize;
    fn embed_query(&self, sample: &McqaSample, mode: QueryMode, separator: &str) -> Result<EmbeddingVector>;
}

#[derive(Debug, Clone, Copy)]
pub struct MockEmbedder {
    pub dim: usize,
}

impl QueryEmbedder for MockEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_query(&self, sample: &McqaSample, mode: QueryMode, separator: &str) -> Result<EmbeddingVector> {
        Ok(mock_embed(&query_text(sample, QueryKind::Mode(mode), separator), self.dim))
    }
}

/// Looks query vectors up by their [`query_id`] in a precomputed store.
impl QueryEmbedder for EmbeddingStore {
    fn dim(&self) -> usize {
        EmbeddingStore::dim(self)
    }

    fn embed_query(&self, sample: &McqaSample, mode: QueryMode, _separator: &str) -> Result<EmbeddingVector> {
        self.require(&query_id(&sample.sample_id, QueryKind::Mode(mode))).cloned()
    }
}

/// Embeds every (id, text) pair into a new store with [`mock_embed`].
pub fn mock_embed_all<'a>(
    texts: impl IntoIterator<Item = (&'a str, &'a str)>,
    dim: usize,
) -> Result<EmbeddingStore> {
    let mut store = EmbeddingStore::new(dim)?;
    for (id, text) in texts {
        store.insert(id, mock_embed(text, dim))?;
    }
    Ok(store)
}
