//! Importers from raw benchmark layouts into the normalized schema.
//!
//! Two source layouts are understood:
//! - `quality`: one article per line with a nested `questions` array and a
//!   1-based `gold_label`.
//! - `race`: either one question per line (`example_id`, `article`,
//!   `question`, `options`, letter `answer`) or one article per line with
//!   parallel `questions` / `options` / `answers` arrays.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use crate::dataset::{segment_sentences, ContextDocument, McqaSample, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Quality,
    Race,
}

impl FromStr for SourceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quality" => Ok(SourceFormat::Quality),
            "race" => Ok(SourceFormat::Race),
            other => Err(format!("unknown source format {other:?} (expected quality or race)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImportMapping {
    pub format: SourceFormat,
    pub split: Split,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImportedDataset {
    pub samples: Vec<McqaSample>,
    pub documents: Vec<ContextDocument>,
}

pub fn import_dataset(path: impl AsRef<Path>, mapping: ImportMapping) -> Result<ImportedDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    import_reader(BufReader::new(file), mapping).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn import_reader<R: BufRead>(reader: R, mapping: ImportMapping) -> Result<ImportedDataset> {
    let mut builder = Builder::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Value = serde_json::from_str(&line).map_err(|e| Error::Import {
            line: line_no,
            message: e.to_string(),
        })?;
        let mut cx = LineCx {
            line: line_no,
            builder: &mut builder,
            split: mapping.split,
        };
        match mapping.format {
            SourceFormat::Quality => cx.quality(&record)?,
            SourceFormat::Race => cx.race(&record)?,
        }
    }
    Ok(builder.finish())
}

#[derive(Default)]
struct Builder {
    samples: Vec<McqaSample>,
    sample_ids: HashSet<String>,
    documents: Vec<ContextDocument>,
    document_ids: HashSet<String>,
}

impl Builder {
    fn finish(self) -> ImportedDataset {
        ImportedDataset {
            samples: self.samples,
            documents: self.documents,
        }
    }
}

struct LineCx<'a> {
    line: usize,
    builder: &'a mut Builder,
    split: Split,
}

impl LineCx<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Import {
            line: self.line,
            message: message.into(),
        }
    }

    fn str_field<'v>(&self, record: &'v Value, key: &str) -> Result<&'v str> {
        record
            .get(key)
            .and_then(Value::as_str)
            .ok_or_else(|| self.err(format!("missing string field {key:?}")))
    }

    fn options(&self, value: Option<&Value>) -> Result<Vec<String>> {
        let arr = value
            .and_then(Value::as_array)
            .ok_or_else(|| self.err("missing options array"))?;
        arr.iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| self.err("option is not a string"))
            })
            .collect()
    }

    fn add_document(&mut self, document_id: &str, article: &str) {
        if self.builder.document_ids.insert(document_id.to_string()) {
            self.builder.documents.push(ContextDocument {
                document_id: document_id.to_string(),
                sentences: segment_sentences(article),
            });
        }
    }

    fn add_sample(&mut self, sample: McqaSample) -> Result<()> {
        if let Some(issue) = sample.problems().into_iter().next() {
            return Err(self.err(issue.to_string()));
        }
        if !self.builder.sample_ids.insert(sample.sample_id.clone()) {
            return Err(self.err(format!("duplicate sample_id {}", sample.sample_id)));
        }
        self.builder.samples.push(sample);
        Ok(())
    }

    fn quality(&mut self, record: &Value) -> Result<()> {
        let article_id = self.str_field(record, "article_id")?.to_string();
        let article = self.str_field(record, "article")?.to_string();
        let set_id = record
            .get("set_unique_id")
            .and_then(Value::as_str)
            .map(str::to_string);
        let questions = record
            .get("questions")
            .and_then(Value::as_array)
            .ok_or_else(|| self.err("missing questions array"))?;

        self.add_document(&article_id, &article);
        for (qi, q) in questions.iter().enumerate() {
            let sample_id = match q.get("question_unique_id").and_then(Value::as_str) {
                Some(id) => id.to_string(),
                None => format!("{}-{}", set_id.as_deref().unwrap_or(&article_id), qi),
            };
            let question = self.str_field(q, "question")?.to_string();
            let options = self.options(q.get("options"))?;
            let answer_index = quality_gold(q.get("gold_label"), options.len())
                .ok_or_else(|| Error::UnknownGoldLabel {
                    sample_id: sample_id.clone(),
                    label: label_text(q.get("gold_label")),
                })?;
            self.add_sample(McqaSample {
                sample_id,
                document_id: article_id.clone(),
                question,
                options,
                answer_index,
                split: self.split,
            })?;
        }
        Ok(())
    }

    fn race(&mut self, record: &Value) -> Result<()> {
        if record.get("questions").is_some() {
            return self.race_article(record);
        }
        let document_id = self.str_field(record, "example_id")?.to_string();
        let article = self.str_field(record, "article")?.to_string();
        self.add_document(&document_id, &article);
        let ordinal = self
            .builder
            .samples
            .iter()
            .filter(|s| s.document_id == document_id)
            .count();
        let sample_id = format!("{document_id}-{ordinal}");
        self.race_question(
            sample_id,
            &document_id,
            record.get("question"),
            record.get("options"),
            record.get("answer"),
        )
    }

    fn race_article(&mut self, record: &Value) -> Result<()> {
        let document_id = self.str_field(record, "id")?.to_string();
        let article = self.str_field(record, "article")?.to_string();
        let array = |key: &str| -> Result<&Vec<Value>> {
            record
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| self.err(format!("missing {key} array")))
        };
        let (questions, options, answers) = (array("questions")?, array("options")?, array("answers")?);
        if questions.len() != options.len() || questions.len() != answers.len() {
            return Err(self.err("questions, options and answers differ in length"));
        }
        self.add_document(&document_id, &article);
        for qi in 0..questions.len() {
            self.race_question(
                format!("{document_id}-{qi}"),
                &document_id,
                questions.get(qi),
                options.get(qi),
                answers.get(qi),
            )?;
        }
        Ok(())
    }

    fn race_question(
        &mut self,
        sample_id: String,
        document_id: &str,
        question: Option<&Value>,
        options: Option<&Value>,
        answer: Option<&Value>,
    ) -> Result<()> {
        let question = question
            .and_then(Value::as_str)
            .ok_or_else(|| self.err("missing string field \"question\""))?
            .to_string();
        let options = self.options(options)?;
        let answer_index = race_gold(answer, options.len()).ok_or_else(|| Error::UnknownGoldLabel {
            sample_id: sample_id.clone(),
            label: label_text(answer),
        })?;
        self.add_sample(McqaSample {
            sample_id,
            document_id: document_id.to_string(),
            question,
            options,
            answer_index,
            split: self.split,
        })
    }
}

fn label_text(value: Option<&Value>) -> String {
    match value {
        None | Some(Value::Null) => "<missing>".into(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

/// 1-based integer (or digit string) label to 0-based index.
fn quality_gold(value: Option<&Value>, option_count: usize) -> Option<usize> {
    let one_based = match value? {
        Value::Number(n) => n.as_u64()?,
        Value::String(s) => s.trim().parse().ok()?,
        _ => return None,
    };
    let index = usize::try_from(one_based).ok()?.checked_sub(1)?;
    (index < option_count).then_some(index)
}

/// Letter label ("A", "B", ...) to 0-based index.
fn race_gold(value: Option<&Value>, option_count: usize) -> Option<usize> {
    let s = value?.as_str()?.trim();
    let mut chars = s.chars();
    let c = chars.next()?.to_ascii_uppercase();
    if chars.next().is_some() || !c.is_ascii_uppercase() {
        return None;
    }
    let index = (c as u8 - b'A') as usize;
    (index < option_count).then_some(index)
}
