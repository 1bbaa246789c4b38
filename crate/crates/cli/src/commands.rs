use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use serde::{Deserialize, Serialize};
use serde_json::json;

use oadr_core::dataset::{read_documents, read_samples, write_documents, write_samples};
use oadr_core::embed::mock_embed_all;
use oadr_core::eval::{
    export_embeddings_table, read_predictions, score_predictions, write_predictions, LabeledVector, LexicalAnswerer,
    Prediction,
};
use oadr_core::jsonl::{read_jsonl, write_jsonl};
use oadr_core::query::{embedding_texts, query_id, QueryKind};
use oadr_core::retrieve::{retrieve_all, write_passages, read_passages, RetrievalDepth, DEFAULT_TOKEN_BUDGET};
use oadr_core::triplet::{read_triplets, write_triplets};
use oadr_core::{
    build_triplet_dataset, eval_accuracy, eval_overlap, import_dataset, read_adapter, read_store, validate_dataset,
    write_adapter, write_store, ContextDocument, EmbeddingStore, ImportMapping, LinearAdapter, McqaSample, QueryMode,
    RetrieveOptions, SourceFormat, Split, TrainConfig, TripletIds, DEFAULT_SEPARATOR,
};

use crate::manifest::{now_unix, RunManifest};

#[derive(Debug, Parser, Serialize)]
#[command(name = "oadr", version, about = "Options-aware dense retrieval toolkit")]
pub struct Cli {
    /// Seed for every random choice made by the run.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Convert a raw QuALITY/RACE JSONL file into normalized samples and documents.
    Import(ImportArgs),
    /// Split raw {"document_id","text"} lines into sentence-segmented documents.
    Segment(SegmentArgs),
    /// Check samples and documents for invariant violations.
    Validate(ValidateArgs),
    /// Build (anchor, positive, negative) triplets from samples.
    Triplets(TripletsArgs),
    /// Embed sentences and query texts with the hashed bag-of-words embedder.
    MockEmbed(MockEmbedArgs),
    /// Train a linear query adapter with the triplet objective.
    Train(TrainArgs),
    /// Retrieve an evidence passage per sample.
    Retrieve(RetrieveArgs),
    /// Overlap of retrieved sentences with oracle-query retrieval.
    EvalOverlap(EvalOverlapArgs),
    /// Answer accuracy from predictions or the lexical baseline.
    EvalAccuracy(EvalAccuracyArgs),
    /// Write query embeddings (or a whole store) as CSV for plotting.
    ExportEmbeddings(ExportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Import(_) => "import",
            Command::Segment(_) => "segment",
            Command::Validate(_) => "validate",
            Command::Triplets(_) => "triplets",
            Command::MockEmbed(_) => "mock-embed",
            Command::Train(_) => "train",
            Command::Retrieve(_) => "retrieve",
            Command::EvalOverlap(_) => "eval-overlap",
            Command::EvalAccuracy(_) => "eval-accuracy",
            Command::ExportEmbeddings(_) => "export-embeddings",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ImportArgs {
    #[arg(long)]
    input: PathBuf,
    /// Source layout: quality or race.
    #[arg(long)]
    format: SourceFormat,
    #[arg(long, default_value = "train")]
    split: Split,
    #[arg(long)]
    samples_out: PathBuf,
    #[arg(long)]
    documents_out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SegmentArgs {
    /// JSONL lines {"document_id": str, "text": str}.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    documents: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TripletsArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = DEFAULT_SEPARATOR)]
    separator: String,
}

#[derive(Debug, Args, Serialize)]
pub struct MockEmbedArgs {
    #[arg(long, requires = "documents", conflicts_with = "texts")]
    samples: Option<PathBuf>,
    #[arg(long, requires = "samples")]
    documents: Option<PathBuf>,
    /// JSONL lines {"id": str, "text": str}, instead of samples + documents.
    #[arg(long, required_unless_present = "samples")]
    texts: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    dim: usize,
    #[arg(long, default_value = DEFAULT_SEPARATOR)]
    separator: String,
    #[arg(long)]
    out: PathBuf,
    /// Also write the embedded (id, text) pairs as JSONL.
    #[arg(long)]
    texts_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    triplets: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    margin: f64,
    #[arg(long, default_value_t = 1e-12)]
    distance_epsilon: f64,
    #[arg(long, default_value = "mock-fnv1a")]
    base_model_tag: String,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineInputs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    documents: PathBuf,
    /// OADRVEC1 store holding sentence and query vectors.
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    adapter: Option<PathBuf>,
    /// Only use samples from this split.
    #[arg(long)]
    split: Option<Split>,
    #[arg(long, default_value_t = DEFAULT_TOKEN_BUDGET)]
    budget: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct RetrieveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    inputs: PipelineInputs,
    #[arg(long, default_value = "options_aware")]
    mode: QueryMode,
    /// Rank only the k nearest sentences (default: all).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalOverlapArgs {
    #[command(flatten)]
    #[serde(flatten)]
    inputs: PipelineInputs,
    #[arg(long, value_delimiter = ',', default_value = "question_only,options_aware,oracle")]
    modes: Vec<QueryMode>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalAccuracyArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    passages: PathBuf,
    /// External predictions; the lexical baseline answers when omitted.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long)]
    split: Option<Split>,
    #[arg(long)]
    out: PathBuf,
    /// Write the lexical baseline's predictions.
    #[arg(long, conflicts_with = "predictions")]
    predictions_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    #[arg(long)]
    embeddings: PathBuf,
    /// Export Q / OQ / OAQ (and adapted OAQ) rows for these samples instead
    /// of the whole store.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long, requires = "samples")]
    adapter: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Runs one subcommand and returns its stdout summary.
pub fn run(cli: Cli) -> Result<serde_json::Value> {
    let name = cli.command.name();
    let seed = cli.seed;
    info!("running {name}");
    let outcome = match &cli.command {
        Command::Import(a) => import(a)?,
        Command::Segment(a) => segment(a)?,
        Command::Validate(a) => validate(a)?,
        Command::Triplets(a) => triplets(a)?,
        Command::MockEmbed(a) => mock_embed(a)?,
        Command::Train(a) => train(a, seed)?,
        Command::Retrieve(a) => retrieve(a)?,
        Command::EvalOverlap(a) => overlap(a)?,
        Command::EvalAccuracy(a) => accuracy(a)?,
        Command::ExportEmbeddings(a) => export(a)?,
    };
    let manifest = RunManifest {
        subcommand: name,
        flags: serde_json::to_value(&cli)?,
        inputs: outcome.inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outcome.outputs.iter().map(|p| p.display().to_string()).collect(),
        seed,
        toolkit_version: env!("CARGO_PKG_VERSION"),
        created_unix: now_unix(),
    };
    manifest.write_alongside()?;
    let mut summary = json!({ "subcommand": name, "outputs": manifest.outputs });
    if let (Some(obj), serde_json::Value::Object(extra)) = (summary.as_object_mut(), outcome.summary) {
        obj.extend(extra);
    }
    Ok(summary)
}

struct Outcome {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    summary: serde_json::Value,
}

fn load_samples(path: &Path, split: Option<Split>) -> Result<Vec<McqaSample>> {
    let mut samples = read_samples(path).with_context(|| format!("reading samples {}", path.display()))?;
    if let Some(split) = split {
        samples.retain(|s| s.split == split);
    }
    debug!("{} samples from {}", samples.len(), path.display());
    Ok(samples)
}

fn load_documents(path: &Path) -> Result<Vec<ContextDocument>> {
    read_documents(path).with_context(|| format!("reading documents {}", path.display()))
}

fn load_store(path: &Path) -> Result<EmbeddingStore> {
    let store = read_store(path).with_context(|| format!("reading embeddings {}", path.display()))?;
    debug!("{} vectors of dim {} from {}", store.len(), store.dim(), path.display());
    Ok(store)
}

fn load_adapter(path: Option<&PathBuf>) -> Result<Option<LinearAdapter>> {
    path.map(|p| {
        read_adapter(p)
            .map(|(a, tag)| {
                debug!("adapter dim {} trained on {tag}", a.dim());
                a
            })
            .with_context(|| format!("reading adapter {}", p.display()))
    })
    .transpose()
}

fn ensure_valid(samples: &[McqaSample], documents: &[ContextDocument]) -> Result<()> {
    let report = validate_dataset(samples, documents);
    if let Some(first) = report.issues.first() {
        bail!("dataset has {} problem(s), first: {first}", report.issues.len());
    }
    Ok(())
}

fn import(a: &ImportArgs) -> Result<Outcome> {
    let mapping = ImportMapping {
        format: a.format,
        split: a.split,
    };
    let data = import_dataset(&a.input, mapping).with_context(|| format!("importing {}", a.input.display()))?;
    ensure_valid(&data.samples, &data.documents)?;
    write_samples(&a.samples_out, &data.samples)?;
    write_documents(&a.documents_out, &data.documents)?;
    info!("imported {} samples, {} documents", data.samples.len(), data.documents.len());
    Ok(Outcome {
        inputs: vec![a.input.clone()],
        outputs: vec![a.samples_out.clone(), a.documents_out.clone()],
        summary: json!({ "samples": data.samples.len(), "documents": data.documents.len() }),
    })
}

#[derive(Deserialize)]
struct RawDocument {
    document_id: String,
    text: String,
}

fn segment(a: &SegmentArgs) -> Result<Outcome> {
    let raw: Vec<RawDocument> = read_jsonl(&a.input)?;
    let docs: Vec<_> = raw
        .iter()
        .map(|r| ContextDocument::from_text(r.document_id.clone(), &r.text))
        .collect();
    ensure_valid(&[], &docs)?;
    write_documents(&a.out, &docs)?;
    let sentences: usize = docs.iter().map(|d| d.sentences.len()).sum();
    Ok(Outcome {
        inputs: vec![a.input.clone()],
        outputs: vec![a.out.clone()],
        summary: json!({ "documents": docs.len(), "sentences": sentences }),
    })
}

fn validate(a: &ValidateArgs) -> Result<Outcome> {
    let samples = load_samples(&a.samples, None)?;
    let documents = load_documents(&a.documents)?;
    let report = validate_dataset(&samples, &documents);
    for issue in &report.issues {
        info!("{issue}");
    }
    Ok(Outcome {
        inputs: vec![a.samples.clone(), a.documents.clone()],
        outputs: vec![],
        summary: json!({ "consistent": report.is_empty(), "issues": report.issues }),
    })
}

fn triplets(a: &TripletsArgs) -> Result<Outcome> {
    let samples = load_samples(&a.samples, None)?;
    let triplets = build_triplet_dataset(&samples, &a.separator)?;
    write_triplets(&a.out, &triplets)?;
    Ok(Outcome {
        inputs: vec![a.samples.clone()],
        outputs: vec![a.out.clone()],
        summary: json!({ "triplets": triplets.len() }),
    })
}

#[derive(Serialize, Deserialize)]
struct TextRecord {
    id: String,
    text: String,
}

fn mock_embed(a: &MockEmbedArgs) -> Result<Outcome> {
    if a.dim == 0 {
        bail!("--dim must be positive");
    }
    let (texts, inputs): (Vec<(String, String)>, Vec<PathBuf>) = match (&a.samples, &a.documents, &a.texts) {
        (Some(s), Some(d), _) => {
            let samples = load_samples(s, None)?;
            let documents = load_documents(d)?;
            ensure_valid(&samples, &documents)?;
            (embedding_texts(&samples, &documents, &a.separator), vec![s.clone(), d.clone()])
        }
        (_, _, Some(t)) => {
            let records: Vec<TextRecord> = read_jsonl(t)?;
            (records.into_iter().map(|r| (r.id, r.text)).collect(), vec![t.clone()])
        }
        _ => bail!("give --samples with --documents, or --texts"),
    };
    let store = mock_embed_all(texts.iter().map(|(i, t)| (i.as_str(), t.as_str())), a.dim)?;
    write_store(&store, &a.out)?;
    let mut outputs = vec![a.out.clone()];
    if let Some(path) = &a.texts_out {
        let records: Vec<_> = texts
            .into_iter()
            .map(|(id, text)| TextRecord { id, text })
            .collect();
        write_jsonl(path, &records)?;
        outputs.push(path.clone());
    }
    Ok(Outcome {
        inputs,
        outputs,
        summary: json!({ "vectors": store.len(), "dim": store.dim() }),
    })
}

fn train(a: &TrainArgs, seed: u64) -> Result<Outcome> {
    let triplets = read_triplets(&a.triplets)?;
    let store = load_store(&a.embeddings)?;
    let ids: Vec<_> = triplets.iter().map(|t| TripletIds::for_sample(&t.sample_id)).collect();
    let config = TrainConfig {
        margin: a.margin,
        learning_rate: a.lr,
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed,
        distance_epsilon: a.distance_epsilon,
    };
    let outcome = oadr_core::train_adapter(&ids, &store, &config)?;
    for (epoch, loss) in outcome.epoch_losses.iter().enumerate() {
        info!("epoch {} mean loss {loss:.6}", epoch + 1);
    }
    write_adapter(&outcome.adapter, &a.base_model_tag, &a.out)?;
    Ok(Outcome {
        inputs: vec![a.triplets.clone(), a.embeddings.clone()],
        outputs: vec![a.out.clone()],
        summary: json!({ "triplets": ids.len(), "dim": store.dim(), "epoch_losses": outcome.epoch_losses }),
    })
}

struct Loaded {
    samples: Vec<McqaSample>,
    documents: Vec<ContextDocument>,
    store: EmbeddingStore,
    adapter: Option<LinearAdapter>,
    paths: Vec<PathBuf>,
}

fn load_pipeline(p: &PipelineInputs) -> Result<Loaded> {
    if p.budget == 0 {
        bail!("--budget must be positive");
    }
    let samples = load_samples(&p.samples, p.split)?;
    let documents = load_documents(&p.documents)?;
    ensure_valid(&samples, &documents)?;
    if samples.is_empty() {
        bail!("no samples selected");
    }
    let store = load_store(&p.embeddings)?;
    let adapter = load_adapter(p.adapter.as_ref())?;
    let mut paths = vec![p.samples.clone(), p.documents.clone(), p.embeddings.clone()];
    paths.extend(p.adapter.clone());
    Ok(Loaded {
        samples,
        documents,
        store,
        adapter,
        paths,
    })
}

fn retrieve(a: &RetrieveArgs) -> Result<Outcome> {
    let l = load_pipeline(&a.inputs)?;
    let options = RetrieveOptions {
        depth: match a.k {
            Some(0) => bail!("--k must be positive"),
            Some(k) => RetrievalDepth::TopK(k),
            None => RetrievalDepth::All,
        },
        ..RetrieveOptions::new(a.mode).with_budget(a.inputs.budget)
    };
    let passages = retrieve_all(&l.samples, &l.documents, &l.store, &l.store, l.adapter.as_ref(), &options)?;
    write_passages(&a.out, &passages)?;
    let mean_tokens = passages.iter().map(|p| p.token_count as f64).sum::<f64>() / passages.len() as f64;
    Ok(Outcome {
        inputs: l.paths,
        outputs: vec![a.out.clone()],
        summary: json!({ "passages": passages.len(), "mean_token_count": mean_tokens }),
    })
}

fn overlap(a: &EvalOverlapArgs) -> Result<Outcome> {
    let l = load_pipeline(&a.inputs)?;
    if a.modes.is_empty() {
        bail!("--modes must name at least one query mode");
    }
    let reports = eval_overlap(
        &l.samples,
        &l.documents,
        &l.store,
        &l.store,
        l.adapter.as_ref(),
        &a.modes,
        a.inputs.budget,
    )?;
    std::fs::write(&a.out, serde_json::to_string_pretty(&reports)? + "\n")
        .with_context(|| format!("writing {}", a.out.display()))?;
    let means: serde_json::Map<_, _> = reports
        .iter()
        .map(|r| (r.query_mode.to_string(), json!(r.mean_overlap)))
        .collect();
    Ok(Outcome {
        inputs: l.paths,
        outputs: vec![a.out.clone()],
        summary: json!({ "adapted": l.adapter.is_some(), "mean_overlap": means }),
    })
}

fn accuracy(a: &EvalAccuracyArgs) -> Result<Outcome> {
    let samples = load_samples(&a.samples, a.split)?;
    let passages = read_passages(&a.passages)?;
    let mut inputs = vec![a.samples.clone(), a.passages.clone()];
    let mut outputs = vec![a.out.clone()];
    let by_id: HashMap<String, String> = passages.into_iter().map(|p| (p.sample_id, p.passage)).collect();
    let (report, answerer) = match &a.predictions {
        Some(path) => {
            inputs.push(path.clone());
            (score_predictions(&samples, &read_predictions(path)?)?, "external")
        }
        None => {
            let report = eval_accuracy(&samples, &by_id, &LexicalAnswerer)?;
            if let Some(path) = &a.predictions_out {
                let preds: Vec<_> = samples
                    .iter()
                    .map(|s| Prediction {
                        sample_id: s.sample_id.clone(),
                        predicted_index: oadr_core::lexical_answer(&s.question, &s.options, &by_id[&s.sample_id]),
                    })
                    .collect();
                write_predictions(path, &preds)?;
                outputs.push(path.clone());
            }
            (report, "lexical")
        }
    };
    std::fs::write(&a.out, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", a.out.display()))?;
    Ok(Outcome {
        inputs,
        outputs,
        summary: json!({ "answerer": answerer, "accuracy": report.accuracy, "correct": report.correct, "total": report.total }),
    })
}

fn export(a: &ExportArgs) -> Result<Outcome> {
    let store = load_store(&a.embeddings)?;
    let adapter = load_adapter(a.adapter.as_ref())?;
    let mut inputs = vec![a.embeddings.clone()];
    let rows = match &a.samples {
        None => store
            .iter()
            .map(|(id, v)| LabeledVector {
                id: id.to_string(),
                label: label_for_id(id).to_string(),
                vector: v.clone(),
            })
            .collect(),
        Some(path) => {
            inputs.push(path.clone());
            inputs.extend(a.adapter.clone());
            let samples = load_samples(path, None)?;
            let mut rows = Vec::new();
            for s in &samples {
                for (mode, label) in [
                    (QueryMode::QuestionOnly, "Q"),
                    (QueryMode::Oracle, "OQ"),
                    (QueryMode::OptionsAware, "OAQ"),
                ] {
                    let id = query_id(&s.sample_id, QueryKind::Mode(mode));
                    let vector = store.require(&id)?.clone();
                    let adapted = match (mode, &adapter) {
                        (QueryMode::OptionsAware, Some(adapter)) => Some(adapter.apply(&vector)?),
                        _ => None,
                    };
                    rows.push(LabeledVector {
                        id: id.clone(),
                        label: label.into(),
                        vector,
                    });
                    if let Some(vector) = adapted {
                        rows.push(LabeledVector {
                            id: format!("{id}:adapted"),
                            label: "OAQ_adapted".into(),
                            vector,
                        });
                    }
                }
            }
            rows
        }
    };
    export_embeddings_table(&rows, store.dim(), &a.out)?;
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone()],
        summary: json!({ "rows": rows.len(), "dim": store.dim() }),
    })
}

/// `sent:..` → "sentence", `query:..:<kind>` → kind, anything else → "vector".
fn label_for_id(id: &str) -> &str {
    if id.starts_with("sent:") {
        "sentence"
    } else if id.starts_with("query:") {
        id.rsplit(':').next().unwrap_or("query")
    } else {
        "vector"
    }
}
