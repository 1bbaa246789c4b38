//! Query text construction and the embedding-id naming scheme.
//!
//! Every query variant is the question followed by zero or more option
//! texts, joined with a separator (a single space by default).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{ContextDocument, McqaSample};

pub const DEFAULT_SEPARATOR: &str = " ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    /// The question alone.
    QuestionOnly,
    /// Question plus the correct option. Needs the gold label.
    Oracle,
    /// Question plus every option in dataset order.
    OptionsAware,
}

impl QueryMode {
    pub const ALL: [QueryMode; 3] = [QueryMode::QuestionOnly, QueryMode::Oracle, QueryMode::OptionsAware];

    pub fn as_str(self) -> &'static str {
        match self {
            QueryMode::QuestionOnly => "question_only",
            QueryMode::Oracle => "oracle",
            QueryMode::OptionsAware => "options_aware",
        }
    }
}

impl fmt::Display for QueryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QueryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QueryMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown query mode {s:?} (expected question_only, oracle or options_aware)"))
    }
}

/// The texts a sample can be embedded as. `Negative` only appears in
/// training triplets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryKind {
    Mode(QueryMode),
    Negative,
}

impl QueryKind {
    pub const ALL: [QueryKind; 4] = [
        QueryKind::Mode(QueryMode::QuestionOnly),
        QueryKind::Mode(QueryMode::Oracle),
        QueryKind::Mode(QueryMode::OptionsAware),
        QueryKind::Negative,
    ];

    fn suffix(self) -> &'static str {
        match self {
            QueryKind::Mode(QueryMode::QuestionOnly) => "question",
            QueryKind::Mode(QueryMode::Oracle) => "oracle",
            QueryKind::Mode(QueryMode::OptionsAware) => "options",
            QueryKind::Negative => "negative",
        }
    }
}

pub fn compose<'a>(question: &str, options: impl IntoIterator<Item = &'a str>, separator: &str) -> String {
    let mut out = question.to_string();
    for option in options {
        out.push_str(separator);
        out.push_str(option);
    }
    out
}

/// Query text for a sample. Panics only if `answer_index` is out of range,
/// which [`McqaSample::problems`] rules out for validated samples.
pub fn query_text(sample: &McqaSample, kind: QueryKind, separator: &str) -> String {
    let options = sample.options.iter().map(String::as_str);
    match kind {
        QueryKind::Mode(QueryMode::QuestionOnly) => sample.question.clone(),
        QueryKind::Mode(QueryMode::Oracle) => {
            compose(&sample.question, [sample.options[sample.answer_index].as_str()], separator)
        }
        QueryKind::Mode(QueryMode::OptionsAware) => compose(&sample.question, options, separator),
        QueryKind::Negative => compose(
            &sample.question,
            options
                .enumerate()
                .filter(|(i, _)| *i != sample.answer_index)
                .map(|(_, o)| o),
            separator,
        ),
    }
}

pub fn sentence_id(document_id: &str, index: usize) -> String {
    format!("sent:{document_id}:{index}")
}

pub fn query_id(sample_id: &str, kind: QueryKind) -> String {
    format!("query:{sample_id}:{}", kind.suffix())
}

/// Every (id, text) pair the pipeline needs embedded: each context sentence
/// and each query variant of each sample, in input order.
pub fn embedding_texts(
    samples: &[McqaSample],
    documents: &[ContextDocument],
    separator: &str,
) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for doc in documents {
        for (i, sentence) in doc.sentences.iter().enumerate() {
            out.push((sentence_id(&doc.document_id, i), sentence.clone()));
        }
    }
    for sample in samples {
        for kind in QueryKind::ALL {
            out.push((query_id(&sample.sample_id, kind), query_text(sample, kind, separator)));
        }
    }
    out
}
