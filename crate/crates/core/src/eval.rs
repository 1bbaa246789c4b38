//! Retrieval overlap against oracle-query retrieval, answer accuracy, and
//! embedding export for external plotting.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adapter::LinearAdapter;
use crate::dataset::{McqaSample, Split};
use crate::dataset::ContextDocument;
use crate::embed::{tokenize, QueryEmbedder};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::query::{compose, QueryMode};
use crate::retrieve::{retrieve_all, RetrieveOptions};
use crate::store::EmbeddingVector;
use crate::store::EmbeddingStore;

/// `100 · |retrieved ∩ oracle| / |oracle|`.
pub fn overlap_percent(retrieved: &BTreeSet<usize>, oracle_retrieved: &BTreeSet<usize>) -> Result<f64> {
    if oracle_retrieved.is_empty() {
        return Err(Error::Empty("oracle retrieval set"));
    }
    let shared = retrieved.intersection(oracle_retrieved).count();
    Ok(100.0 * shared as f64 / oracle_retrieved.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOverlap {
    pub sample_id: String,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub query_mode: QueryMode,
    pub adapted: bool,
    pub sample_count: usize,
    pub mean_overlap: f64,
    pub per_sample: Vec<SampleOverlap>,
    /// Samples whose oracle passage was empty (no sentence fits the budget).
    pub skipped: Vec<String>,
}

/// For each mode, retrieves a passage per sample and scores its sentence set
/// against the un-adapted oracle-query passage of the same sample.
///
/// The adapter, when given, applies to every evaluated mode; the oracle
/// reference is always retrieved with base query embeddings. Samples whose
/// oracle passage is empty are listed in `skipped` and left out of the mean.
pub fn eval_overlap(
    samples: &[McqaSample],
    documents: &[ContextDocument],
    context_store: &EmbeddingStore,
    embedder: &dyn QueryEmbedder,
    adapter: Option<&LinearAdapter>,
    modes: &[QueryMode],
    token_budget: usize,
) -> Result<Vec<OverlapReport>> {
    if samples.is_empty() {
        return Err(Error::Empty("sample list"));
    }
    let reference_opts = RetrieveOptions::new(QueryMode::Oracle).with_budget(token_budget);
    let reference = retrieve_all(samples, documents, context_store, embedder, None, &reference_opts)?;

    modes
        .iter()
        .map(|&mode| {
            let opts = RetrieveOptions::new(mode).with_budget(token_budget);
            let passages = retrieve_all(samples, documents, context_store, embedder, adapter, &opts)?;
            let mut per_sample = Vec::with_capacity(passages.len());
            let mut skipped = Vec::new();
            for (got, oracle) in passages.iter().zip(&reference) {
                let oracle_set: BTreeSet<_> = oracle.sentence_indices.iter().copied().collect();
                if oracle_set.is_empty() {
                    skipped.push(oracle.sample_id.clone());
                    continue;
                }
                let got: BTreeSet<_> = got.sentence_indices.iter().copied().collect();
                per_sample.push(SampleOverlap {
                    sample_id: oracle.sample_id.clone(),
                    overlap: overlap_percent(&got, &oracle_set)?,
                });
            }
            if per_sample.is_empty() {
                return Err(Error::Empty("oracle retrieval for every sample"));
            }
            let mean_overlap = per_sample.iter().map(|s| s.overlap).sum::<f64>() / per_sample.len() as f64;
            Ok(OverlapReport {
                query_mode: mode,
                adapted: adapter.is_some(),
                sample_count: per_sample.len(),
                mean_overlap,
                per_sample,
                skipped,
            })
        })
        .collect()
}

/// Picks an option index given the question, options and retrieved passage.
pub trait Answerer {
    fn answer(&self, question: &str, options: &[String], passage: &str) -> usize;
}

impl<F> Answerer for F
where
    F: Fn(&str, &[String], &str) -> usize,
{
    fn answer(&self, question: &str, options: &[String], passage: &str) -> usize {
        self(question, options, passage)
    }
}

/// Scores each option by how many distinct lowercase tokens of
/// "question option" also occur in the passage; ties go to the lowest index.
pub fn lexical_answer(question: &str, options: &[String], passage: &str) -> usize {
    let passage_tokens: HashSet<String> = tokenize(passage).collect();
    let mut best = (0, 0);
    for (i, option) in options.iter().enumerate() {
        let text = compose(question, [option.as_str()], " ");
        let query_tokens: HashSet<String> = tokenize(&text).collect();
        let score = query_tokens.intersection(&passage_tokens).count();
        if score > best.1 {
            best = (i, score);
        }
    }
    best.0
}

pub struct LexicalAnswerer;

impl Answerer for LexicalAnswerer {
    fn answer(&self, question: &str, options: &[String], passage: &str) -> usize {
        lexical_answer(question, options, passage)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    /// `None` when the samples span more than one split.
    pub split: Option<Split>,
}

fn common_split(samples: &[McqaSample]) -> Option<Split> {
    let first = samples.first()?.split;
    samples.iter().all(|s| s.split == first).then_some(first)
}

fn accuracy_report(samples: &[McqaSample], correct: usize) -> Result<AccuracyReport> {
    if samples.is_empty() {
        return Err(Error::Empty("sample list"));
    }
    Ok(AccuracyReport {
        correct,
        total: samples.len(),
        accuracy: correct as f64 / samples.len() as f64,
        split: common_split(samples),
    })
}

/// `passages` maps sample_id to passage text.
pub fn eval_accuracy(
    samples: &[McqaSample],
    passages: &HashMap<String, String>,
    answerer: &dyn Answerer,
) -> Result<AccuracyReport> {
    let mut correct = 0;
    for sample in samples {
        let passage = passages
            .get(&sample.sample_id)
            .ok_or_else(|| Error::MissingPassage(sample.sample_id.clone()))?;
        if answerer.answer(&sample.question, &sample.options, passage) == sample.answer_index {
            correct += 1;
        }
    }
    accuracy_report(samples, correct)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    pub predicted_index: usize,
}

/// Scores externally produced predictions.
pub fn score_predictions(samples: &[McqaSample], predictions: &[Prediction]) -> Result<AccuracyReport> {
    let by_id: HashMap<&str, usize> = predictions
        .iter()
        .map(|p| (p.sample_id.as_str(), p.predicted_index))
        .collect();
    let mut correct = 0;
    for sample in samples {
        let predicted = by_id
            .get(sample.sample_id.as_str())
            .ok_or_else(|| Error::MissingPrediction(sample.sample_id.clone()))?;
        if *predicted == sample.answer_index {
            correct += 1;
        }
    }
    accuracy_report(samples, correct)
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    jsonl::read_jsonl(path)
}

pub fn write_predictions(path: impl AsRef<Path>, predictions: &[Prediction]) -> Result<()> {
    jsonl::write_jsonl(path, predictions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVector {
    pub id: String,
    pub label: String,
    pub vector: EmbeddingVector,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

/// CSV with header `id,label,v0,..,v{dim-1}`. Floats use Rust's shortest
/// round-trip formatting.
pub fn export_embeddings_table(rows: &[LabeledVector], dim: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(row) = rows.iter().find(|r| r.vector.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: row.vector.dim(),
        });
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = ["id".to_string(), "label".to_string()]
        .into_iter()
        .chain((0..dim).map(|i| format!("v{i}")));
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        let fields = [row.id.clone(), row.label.clone()]
            .into_iter()
            .chain(row.vector.iter().map(|v| v.to_string()));
        w.write_record(fields).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_embeddings_table(path: impl AsRef<Path>) -> Result<Vec<LabeledVector>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let bad = |message: String| Error::Record {
            path: path.to_path_buf(),
            line: i + 2,
            message,
        };
        if record.len() < 2 {
            return Err(bad("expected id and label columns".into()));
        }
        let values = record
            .iter()
            .skip(2)
            .map(|f| f.parse::<f32>().map_err(|e| bad(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(LabeledVector {
            id: record[0].to_string(),
            label: record[1].to_string(),
            vector: EmbeddingVector::new(values)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn overlap_examples() {
        let p = overlap_percent(&set(&[1, 2, 3]), &set(&[2, 3, 4])).unwrap();
        assert!((p - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(overlap_percent(&set(&[7, 9]), &set(&[7, 9])).unwrap(), 100.0);
        assert_eq!(overlap_percent(&set(&[1]), &set(&[2])).unwrap(), 0.0);
        assert_eq!(overlap_percent(&set(&[]), &set(&[2])).unwrap(), 0.0);
        assert!(matches!(overlap_percent(&set(&[1]), &set(&[])), Err(Error::Empty(_))));
    }

    fn opts(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn lexical_examples() {
        let o = opts(&["red apple", "blue whale", "green tea"]);
        assert_eq!(lexical_answer("Which?", &o, "A blue whale surfaced."), 1);
        assert_eq!(lexical_answer("Which?", &o, ""), 0);
        assert_eq!(lexical_answer("Which?", &opts(&["same", "same"]), "same"), 0);
        // Question tokens count equally for every option.
        assert_eq!(lexical_answer("Which tea?", &o, "which tea is GREEN"), 2);
    }

    fn sample(id: &str, options: usize, answer: usize) -> McqaSample {
        McqaSample {
            sample_id: id.into(),
            document_id: "d".into(),
            question: "q".into(),
            options: (0..options).map(|i| format!("{id} o{i}")).collect(),
            answer_index: answer,
            split: Split::Test,
        }
    }

    #[test]
    fn accuracy_with_constant_and_shifted_answerers() {
        let samples: Vec<_> = (0..5).map(|i| sample(&format!("s{i}"), 4, 0)).collect();
        let passages: HashMap<_, _> = samples.iter().map(|s| (s.sample_id.clone(), String::new())).collect();
        let r = eval_accuracy(&samples, &passages, &|_: &str, _: &[String], _: &str| 0).unwrap();
        assert_eq!((r.correct, r.total, r.accuracy, r.split), (5, 5, 1.0, Some(Split::Test)));

        let mixed: Vec<_> = (0..6).map(|i| sample(&format!("m{i}"), 3, i % 3)).collect();
        let passages: HashMap<_, _> = mixed.iter().map(|s| (s.sample_id.clone(), String::new())).collect();
        let by_id: HashMap<_, _> = mixed.iter().map(|s| (s.options.clone(), s.answer_index)).collect();
        // Shifted answerer: looks up the true answer through a side table.
        let wrong = |_: &str, o: &[String], _: &str| (by_id[o] + 1) % o.len();
        let r = eval_accuracy(&mixed, &passages, &wrong).unwrap();
        assert_eq!(r.accuracy, 0.0);
    }

    #[test]
    fn accuracy_errors() {
        let samples = vec![sample("a", 2, 0)];
        assert!(matches!(
            eval_accuracy(&samples, &HashMap::new(), &LexicalAnswerer),
            Err(Error::MissingPassage(id)) if id == "a"
        ));
        assert!(matches!(score_predictions(&samples, &[]), Err(Error::MissingPrediction(_))));
        let r = score_predictions(&samples, &[Prediction {
            sample_id: "a".into(),
            predicted_index: 0,
        }])
        .unwrap();
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn export_table_shapes_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        export_embeddings_table(&[], 3, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "id,label,v0,v1,v2\n");

        let rows = vec![
            LabeledVector {
                id: "x,1".into(),
                label: "OQ".into(),
                vector: EmbeddingVector::new(vec![0.1, -1.0e-38]).unwrap(),
            },
            LabeledVector {
                id: "y".into(),
                label: "OAQ".into(),
                vector: EmbeddingVector::new(vec![f32::MAX, 1.0 / 3.0]).unwrap(),
            },
        ];
        export_embeddings_table(&rows, 2, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 3);
        let back = read_embeddings_table(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!((&a.id, &a.label), (&b.id, &b.label));
            let bits = |v: &EmbeddingVector| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.vector), bits(&b.vector));
        }
        assert!(export_embeddings_table(&rows, 3, &path).is_err());
    }
}
