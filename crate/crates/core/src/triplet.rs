//! Contrastive (anchor, positive, negative) construction from MCQA samples.
//!
//! For a question Q with options O1..On and correct option Oc:
//! anchor = Q + Oc, positive = Q + O1 + .. + On, negative = Q + every Oi != Oc.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::McqaSample;
use crate::error::{Error, Result};
use crate::jsonl;
use crate::query::{query_text, QueryKind, QueryMode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub sample_id: String,
    pub anchor: String,
    pub positive: String,
    pub negative: String,
}

pub fn build_triplet(sample: &McqaSample, separator: &str) -> Result<Triplet> {
    if let Some(issue) = sample.problems().into_iter().next() {
        return Err(Error::InvalidSample {
            sample_id: sample.sample_id.clone(),
            reason: issue.to_string(),
        });
    }
    Ok(Triplet {
        sample_id: sample.sample_id.clone(),
        anchor: query_text(sample, QueryKind::Mode(QueryMode::Oracle), separator),
        positive: query_text(sample, QueryKind::Mode(QueryMode::OptionsAware), separator),
        negative: query_text(sample, QueryKind::Negative, separator),
    })
}

pub fn build_triplet_dataset(samples: &[McqaSample], separator: &str) -> Result<Vec<Triplet>> {
    samples.iter().map(|s| build_triplet(s, separator)).collect()
}

pub fn read_triplets(path: impl AsRef<Path>) -> Result<Vec<Triplet>> {
    jsonl::read_jsonl(path)
}

pub fn write_triplets(path: impl AsRef<Path>, triplets: &[Triplet]) -> Result<()> {
    jsonl::write_jsonl(path, triplets)
}
