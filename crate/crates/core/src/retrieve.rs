//! Evidence selection by L2 distance and order-preserving passage assembly.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adapter::LinearAdapter;
use crate::dataset::{ContextDocument, McqaSample};
use crate::embed::QueryEmbedder;
use crate::error::{Error, Result};
use crate::jsonl;
use crate::query::{sentence_id, QueryMode, DEFAULT_SEPARATOR};
use crate::store::EmbeddingStore;

pub const DEFAULT_TOKEN_BUDGET: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalHit {
    pub sentence_index: usize,
    pub distance: f64,
}

fn rank_order(a: &RetrievalHit, b: &RetrievalHit) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then(a.sentence_index.cmp(&b.sentence_index))
}

pub fn l2_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// The `k` nearest sentences (all of them if `k` ≥ count), nearest first,
/// ties broken by lower sentence index.
pub fn top_k<V: AsRef<[f32]>>(query: &[f32], sentences: &[V], k: usize) -> Result<Vec<RetrievalHit>> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    if sentences.is_empty() {
        return Err(Error::Empty("sentence list"));
    }
    let mut hits = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let s = s.as_ref();
            if s.len() != query.len() {
                return Err(Error::DimensionMismatch {
                    expected: query.len(),
                    found: s.len(),
                });
            }
            Ok(RetrievalHit {
                sentence_index: i,
                distance: l2_distance(query, s),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if k < hits.len() {
        hits.select_nth_unstable_by(k - 1, rank_order);
        hits.truncate(k);
    }
    hits.sort_unstable_by(rank_order);
    Ok(hits)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Passage {
    pub text: String,
    pub sentence_indices: Vec<usize>,
    pub token_count: usize,
}

pub fn whitespace_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Walks `ranked` in order, keeping each sentence while it fits in the
/// remaining budget and stopping at the first that does not. Kept sentences
/// are re-sorted into document order and joined with single spaces.
pub fn assemble_passage<S: AsRef<str>>(ranked: &[RetrievalHit], sentences: &[S], token_budget: usize) -> Result<Passage> {
    if let Some(hit) = ranked.iter().find(|h| h.sentence_index >= sentences.len()) {
        return Err(Error::IndexOutOfRange {
            index: hit.sentence_index,
            len: sentences.len(),
        });
    }
    let mut kept = Vec::new();
    let mut used = 0;
    for hit in ranked {
        let n = whitespace_tokens(sentences[hit.sentence_index].as_ref());
        if used + n > token_budget {
            break;
        }
        used += n;
        kept.push(hit.sentence_index);
    }
    kept.sort_unstable();
    kept.dedup();
    let text = kept
        .iter()
        .map(|&i| sentences[i].as_ref())
        .collect::<Vec<_>>()
        .join(" ");
    Ok(Passage {
        token_count: whitespace_tokens(&text),
        text,
        sentence_indices: kept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrievalDepth {
    /// Rank every sentence and let the budget decide.
    All,
    TopK(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrieveOptions {
    pub mode: QueryMode,
    pub token_budget: usize,
    pub depth: RetrievalDepth,
    pub separator: String,
}

impl RetrieveOptions {
    pub fn new(mode: QueryMode) -> Self {
        Self {
            mode,
            token_budget: DEFAULT_TOKEN_BUDGET,
            depth: RetrievalDepth::All,
            separator: DEFAULT_SEPARATOR.to_string(),
        }
    }

    pub fn with_budget(mut self, token_budget: usize) -> Self {
        self.token_budget = token_budget;
        self
    }
}

/// Looks up every sentence vector of `document` in `store`, in order.
pub fn sentence_vectors<'s>(document: &ContextDocument, store: &'s EmbeddingStore) -> Result<Vec<&'s [f32]>> {
    (0..document.sentences.len())
        .map(|i| {
            store
                .get(&sentence_id(&document.document_id, i))
                .map(|v| v.as_slice())
                .ok_or_else(|| Error::MissingSentenceVector {
                    document_id: document.document_id.clone(),
                    index: i,
                })
        })
        .collect()
}

pub fn retrieve_for_sample(
    sample: &McqaSample,
    document: &ContextDocument,
    context_store: &EmbeddingStore,
    embedder: &dyn QueryEmbedder,
    adapter: Option<&LinearAdapter>,
    options: &RetrieveOptions,
) -> Result<Passage> {
    if options.token_budget == 0 {
        return Err(Error::InvalidConfig("token budget must be positive".into()));
    }
    if let Some(issue) = sample.problems().into_iter().next() {
        return Err(Error::InvalidSample {
            sample_id: sample.sample_id.clone(),
            reason: issue.to_string(),
        });
    }
    if sample.document_id != document.document_id {
        return Err(Error::InvalidSample {
            sample_id: sample.sample_id.clone(),
            reason: format!(
                "refers to document {} but was given {}",
                sample.document_id, document.document_id
            ),
        });
    }
    let vectors = sentence_vectors(document, context_store)?;
    if vectors.is_empty() {
        return Ok(Passage::default());
    }
    let mut query = embedder.embed_query(sample, options.mode, &options.separator)?;
    if let Some(adapter) = adapter {
        query = adapter.apply(&query)?;
    }
    if query.dim() != context_store.dim() {
        return Err(Error::DimensionMismatch {
            expected: context_store.dim(),
            found: query.dim(),
        });
    }
    let k = match options.depth {
        RetrievalDepth::All => vectors.len(),
        RetrievalDepth::TopK(k) => k,
    };
    let hits = top_k(&query, &vectors, k)?;
    assemble_passage(&hits, &document.sentences, options.token_budget)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassageRecord {
    pub sample_id: String,
    pub passage: String,
    pub sentence_indices: Vec<usize>,
    pub token_count: usize,
    pub query_mode: QueryMode,
}

/// Retrieves a passage for every sample, in sample order.
pub fn retrieve_all(
    samples: &[McqaSample],
    documents: &[ContextDocument],
    context_store: &EmbeddingStore,
    embedder: &dyn QueryEmbedder,
    adapter: Option<&LinearAdapter>,
    options: &RetrieveOptions,
) -> Result<Vec<PassageRecord>> {
    let by_id: HashMap<&str, &ContextDocument> =
        documents.iter().map(|d| (d.document_id.as_str(), d)).collect();
    samples
        .iter()
        .map(|sample| {
            let document = by_id
                .get(sample.document_id.as_str())
                .ok_or_else(|| Error::MissingDocument(sample.sample_id.clone()))?;
            let passage = retrieve_for_sample(sample, document, context_store, embedder, adapter, options)?;
            Ok(PassageRecord {
                sample_id: sample.sample_id.clone(),
                passage: passage.text,
                sentence_indices: passage.sentence_indices,
                token_count: passage.token_count,
                query_mode: options.mode,
            })
        })
        .collect()
}

pub fn read_passages(path: impl AsRef<Path>) -> Result<Vec<PassageRecord>> {
    jsonl::read_jsonl(path)
}

pub fn write_passages(path: impl AsRef<Path>, passages: &[PassageRecord]) -> Result<()> {
    jsonl::write_jsonl(path, passages)
}
