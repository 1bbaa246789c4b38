#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn toy(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/toy").join(name)
}

pub fn oadr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oadr"))
        .current_dir(dir)
        .env_remove("OADR_LOG")
        .args(args)
        .output()
        .expect("spawn oadr")
}

pub fn oadr_ok(dir: &Path, args: &[&str]) -> serde_json::Value {
    let out = oadr(dir, args);
    assert!(
        out.status.success(),
        "oadr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON object")
}

/// Files written by [`run_pipeline`], relative to its directory.
pub const PIPELINE_OUTPUTS: &[&str] = &[
    "samples.jsonl",
    "documents.jsonl",
    "triplets.jsonl",
    "store.oadrvec",
    "texts.jsonl",
    "adapter.json",
    "passages.jsonl",
    "overlap.json",
    "accuracy.json",
    "predictions.jsonl",
    "embeddings.csv",
];

/// Import the QuALITY toy set into `dir` and run every stage on it with
/// relative paths, so that two runs in different directories are comparable.
pub fn run_pipeline(dir: &Path) {
    std::fs::copy(toy("quality_toy.jsonl"), dir.join("raw.jsonl")).unwrap();
    oadr_ok(dir, &["import", "--input", "raw.jsonl", "--format", "quality", "--samples-out", "samples.jsonl", "--documents-out", "documents.jsonl"]);
    oadr_ok(dir, &["validate", "--samples", "samples.jsonl", "--documents", "documents.jsonl"]);
    oadr_ok(dir, &["triplets", "--samples", "samples.jsonl", "--out", "triplets.jsonl"]);
    oadr_ok(dir, &["mock-embed", "--samples", "samples.jsonl", "--documents", "documents.jsonl", "--dim", "64", "--out", "store.oadrvec", "--texts-out", "texts.jsonl"]);
    oadr_ok(dir, &["train", "--triplets", "triplets.jsonl", "--embeddings", "store.oadrvec", "--lr", "0.1", "--epochs", "3", "--batch-size", "4", "--out", "adapter.json"]);
    let inputs = ["--samples", "samples.jsonl", "--documents", "documents.jsonl", "--embeddings", "store.oadrvec", "--adapter", "adapter.json", "--budget", "40"];
    let mut args = vec!["retrieve"];
    args.extend(inputs);
    args.extend(["--out", "passages.jsonl"]);
    oadr_ok(dir, &args);
    let mut args = vec!["eval-overlap"];
    args.extend(inputs);
    args.extend(["--out", "overlap.json"]);
    oadr_ok(dir, &args);
    oadr_ok(dir, &["eval-accuracy", "--samples", "samples.jsonl", "--passages", "passages.jsonl", "--out", "accuracy.json", "--predictions-out", "predictions.jsonl"]);
    oadr_ok(dir, &["export-embeddings", "--embeddings", "store.oadrvec", "--samples", "samples.jsonl", "--adapter", "adapter.json", "--out", "embeddings.csv"]);
}
