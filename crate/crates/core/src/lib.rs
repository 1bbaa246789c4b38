//! Options-aware dense retrieval for long-context multiple-choice QA.
//!
//! The pipeline:
//! 1. [`import`] raw QA data into normalized [`McqaSample`]s and sentence
//!    segmented [`ContextDocument`]s.
//! 2. Build contrastive [`Triplet`]s: oracle query as anchor, the
//!    question with all options as positive, the question with the wrong
//!    options as negative.
//! 3. Embed texts (see [`embed`]) into an [`EmbeddingStore`].
//! 4. Train a [`LinearAdapter`] so adapted options-aware queries land near
//!    the base oracle-query embedding.
//! 5. Retrieve evidence sentences by L2 distance and assemble a passage in
//!    document order under a token budget.
//! 6. Measure overlap with oracle-query retrieval and answer accuracy.

pub mod adapter;
pub mod dataset;
pub mod embed;
pub mod error;
pub mod eval;
pub mod import;
pub mod jsonl;
pub mod query;
pub mod retrieve;
pub mod store;
pub mod synthetic;
pub mod train;
pub mod triplet;

pub use adapter::{apply_adapter, read_adapter, write_adapter, LinearAdapter};
pub use dataset::{segment_sentences, validate_dataset, ContextDocument, McqaSample, Split, ValidationReport};
pub use embed::{mock_embed, MockEmbedder, QueryEmbedder};
pub use error::{Error, Result};
pub use eval::{eval_accuracy, eval_overlap, lexical_answer, overlap_percent, AccuracyReport, OverlapReport};
pub use import::{import_dataset, ImportMapping, SourceFormat};
pub use query::{QueryMode, DEFAULT_SEPARATOR};
pub use retrieve::{assemble_passage, retrieve_for_sample, top_k, Passage, RetrievalHit, RetrieveOptions};
pub use store::{read_store, write_store, EmbeddingStore, EmbeddingVector};
pub use train::{train_adapter, triplet_loss, triplet_loss_grad, TrainConfig, TripletIds};
pub use triplet::{build_triplet, build_triplet_dataset, Triplet};
