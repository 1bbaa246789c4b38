//! Normalized MCQA samples, context documents, sentence segmentation and
//! dataset consistency checks.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?} (expected train, dev or test)")),
        }
    }
}

/// One multiple-choice question over a context document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McqaSample {
    pub sample_id: String,
    pub document_id: String,
    pub question: String,
    pub options: Vec<String>,
    pub answer_index: usize,
    pub split: Split,
}

impl McqaSample {
    pub fn correct_option(&self) -> Option<&str> {
        self.options.get(self.answer_index).map(String::as_str)
    }

    /// Field-level invariant violations of this sample alone.
    pub fn problems(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        let id = || self.sample_id.clone();
        if self.question.trim().is_empty() {
            issues.push(Issue::EmptyQuestion { sample_id: id() });
        }
        if self.options.len() < 2 {
            issues.push(Issue::TooFewOptions {
                sample_id: id(),
                count: self.options.len(),
            });
        }
        for (index, option) in self.options.iter().enumerate() {
            if option.trim().is_empty() {
                issues.push(Issue::EmptyOption {
                    sample_id: id(),
                    index,
                });
            }
        }
        if self.answer_index >= self.options.len() {
            issues.push(Issue::AnswerOutOfRange {
                sample_id: id(),
                answer_index: self.answer_index,
                option_count: self.options.len(),
            });
        }
        issues
    }
}

/// A context passage as ordered sentences; the index is the original position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextDocument {
    pub document_id: String,
    pub sentences: Vec<String>,
}

impl ContextDocument {
    pub fn from_text(document_id: impl Into<String>, text: &str) -> Self {
        Self {
            document_id: document_id.into(),
            sentences: segment_sentences(text),
        }
    }
}

/// Splits after `.`, `!` or `?` when the terminator is followed by
/// whitespace. Fragments are trimmed and empty ones dropped.
///
/// No abbreviation handling: "Mr. Smith" yields two sentences.
pub fn segment_sentences(passage: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = passage.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            if let Some(&(_, next)) = chars.peek() {
                if next.is_whitespace() {
                    let end = i + c.len_utf8();
                    push_trimmed(&mut out, &passage[start..end]);
                    start = end;
                }
            }
        }
    }
    push_trimmed(&mut out, &passage[start..]);
    out
}

fn push_trimmed(out: &mut Vec<String>, fragment: &str) {
    let trimmed = fragment.trim();
    if !trimmed.is_empty() {
        out.push(trimmed.to_string());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Issue {
    EmptyQuestion {
        sample_id: String,
    },
    EmptyOption {
        sample_id: String,
        index: usize,
    },
    TooFewOptions {
        sample_id: String,
        count: usize,
    },
    AnswerOutOfRange {
        sample_id: String,
        answer_index: usize,
        option_count: usize,
    },
    DuplicateSampleId {
        sample_id: String,
    },
    DuplicateDocumentId {
        document_id: String,
    },
    EmptySentence {
        document_id: String,
        index: usize,
    },
    DanglingDocument {
        sample_id: String,
        document_id: String,
    },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::EmptyQuestion { sample_id } => write!(f, "sample {sample_id}: empty question"),
            Issue::EmptyOption { sample_id, index } => {
                write!(f, "sample {sample_id}: option {index} is empty")
            }
            Issue::TooFewOptions { sample_id, count } => {
                write!(f, "sample {sample_id}: {count} options, need at least 2")
            }
            Issue::AnswerOutOfRange {
                sample_id,
                answer_index,
                option_count,
            } => write!(
                f,
                "sample {sample_id}: answer_index {answer_index} out of range for {option_count} options"
            ),
            Issue::DuplicateSampleId { sample_id } => write!(f, "duplicate sample_id {sample_id}"),
            Issue::DuplicateDocumentId { document_id } => {
                write!(f, "duplicate document_id {document_id}")
            }
            Issue::EmptySentence { document_id, index } => {
                write!(f, "document {document_id}: sentence {index} is empty")
            }
            Issue::DanglingDocument {
                sample_id,
                document_id,
            } => write!(f, "sample {sample_id}: document {document_id} not found"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

pub fn validate_dataset(samples: &[McqaSample], documents: &[ContextDocument]) -> ValidationReport {
    let mut issues = Vec::new();

    let mut doc_ids = HashSet::new();
    for doc in documents {
        if !doc_ids.insert(doc.document_id.as_str()) {
            issues.push(Issue::DuplicateDocumentId {
                document_id: doc.document_id.clone(),
            });
        }
        for (index, sentence) in doc.sentences.iter().enumerate() {
            if sentence.trim().is_empty() {
                issues.push(Issue::EmptySentence {
                    document_id: doc.document_id.clone(),
                    index,
                });
            }
        }
    }

    let mut sample_ids = HashSet::new();
    for sample in samples {
        if !sample_ids.insert(sample.sample_id.as_str()) {
            issues.push(Issue::DuplicateSampleId {
                sample_id: sample.sample_id.clone(),
            });
        }
        issues.extend(sample.problems());
        if !doc_ids.contains(sample.document_id.as_str()) {
            issues.push(Issue::DanglingDocument {
                sample_id: sample.sample_id.clone(),
                document_id: sample.document_id.clone(),
            });
        }
    }

    ValidationReport { issues }
}

pub fn read_samples(path: impl AsRef<Path>) -> Result<Vec<McqaSample>> {
    jsonl::read_jsonl(path)
}

pub fn write_samples(path: impl AsRef<Path>, samples: &[McqaSample]) -> Result<()> {
    jsonl::write_jsonl(path, samples)
}

pub fn read_documents(path: impl AsRef<Path>) -> Result<Vec<ContextDocument>> {
    jsonl::read_jsonl(path)
}

pub fn write_documents(path: impl AsRef<Path>, documents: &[ContextDocument]) -> Result<()> {
    jsonl::write_jsonl(path, documents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn sample(id: &str, doc: &str, options: &[&str], answer: usize) -> McqaSample {
        McqaSample {
            sample_id: id.into(),
            document_id: doc.into(),
            question: "What happened?".into(),
            options: options.iter().map(|s| s.to_string()).collect(),
            answer_index: answer,
            split: Split::Train,
        }
    }

    fn doc(id: &str) -> ContextDocument {
        ContextDocument {
            document_id: id.into(),
            sentences: vec!["One.".into(), "Two.".into()],
        }
    }

    #[test]
    fn segments_basic_cases() {
        assert!(segment_sentences("").is_empty());
        assert_eq!(segment_sentences("A cat. A dog!"), vec!["A cat.", "A dog!"]);
        assert_eq!(segment_sentences("He said hi. ok"), vec!["He said hi.", "ok"]);
    }

    #[test]
    fn terminator_without_whitespace_does_not_split() {
        assert_eq!(segment_sentences("v1.2 is out.  Really?\nYes"), vec![
            "v1.2 is out.",
            "Really?",
            "Yes"
        ]);
        assert_eq!(segment_sentences("Wait... what"), vec!["Wait...", "what"]);
        assert!(segment_sentences("   \n\t ").is_empty());
    }

    #[test]
    fn consistent_set_has_empty_report() {
        let samples = vec![sample("s1", "d1", &["a", "b"], 1), sample("s2", "d1", &["a", "b", "c"], 0)];
        assert!(validate_dataset(&samples, &[doc("d1")]).is_empty());
    }

    #[test]
    fn dangling_document_reported_once() {
        let report = validate_dataset(&[sample("s1", "missing", &["a", "b"], 0)], &[doc("d1")]);
        assert_eq!(report.issues, vec![Issue::DanglingDocument {
            sample_id: "s1".into(),
            document_id: "missing".into()
        }]);
    }

    #[test]
    fn answer_out_of_range_reported() {
        let report = validate_dataset(&[sample("s1", "d1", &["a", "b", "c", "d"], 4)], &[doc("d1")]);
        assert_eq!(report.issues, vec![Issue::AnswerOutOfRange {
            sample_id: "s1".into(),
            answer_index: 4,
            option_count: 4
        }]);
    }

    #[test]
    fn duplicates_and_blank_fields_reported() {
        let mut bad = sample("s1", "d1", &["a", "  "], 0);
        bad.question = " ".into();
        let dup = sample("s1", "d1", &["a", "b"], 0);
        let mut d = doc("d1");
        d.sentences.push(" ".into());
        let report = validate_dataset(&[bad, dup], &[d.clone(), d]);
        let kinds: Vec<_> = report.issues.iter().map(|i| i.to_string()).collect();
        assert_eq!(report.issues.len(), 6, "{kinds:?}");
    }

    proptest! {
        #[test]
        fn segmentation_preserves_non_whitespace(text in "[a-zA-Z .!?\n\t]{0,80}") {
            let parts = segment_sentences(&text);
            let joined = parts.join(" ");
            let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
            prop_assert_eq!(norm(&joined), norm(&text));
            prop_assert!(parts.iter().all(|p| !p.trim().is_empty() && p.trim() == p));
            prop_assert_eq!(parts, segment_sentences(&text));
        }
    }
}
