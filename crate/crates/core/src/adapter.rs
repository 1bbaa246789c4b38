//! Linear query adapter `f(x) = W·x + b` and its JSON file form.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::EmbeddingVector;

/// Square weight matrix (row-major) plus bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearAdapter {
    dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LinearAdapter {
    pub fn identity(dim: usize) -> Self {
        let mut weights = vec![0.0; dim * dim];
        for i in 0..dim {
            weights[i * dim + i] = 1.0;
        }
        Self {
            dim,
            weights,
            bias: vec![0.0; dim],
        }
    }

    pub fn from_parts(dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: weights.len(),
            });
        }
        if bias.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bias.len(),
            });
        }
        if let Some(index) = weights.iter().chain(&bias).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { dim, weights, bias })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.dim + col]
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.bias)
    }

    /// `W·x + b` in f64. Caller guarantees `x.len() == dim`.
    pub(crate) fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.weights[i * self.dim..(i + 1) * self.dim];
            *o = row.iter().zip(x).fold(self.bias[i], |acc, (w, v)| acc + w * v);
        }
    }

    pub fn apply(&self, v: &EmbeddingVector) -> Result<EmbeddingVector> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim(),
            });
        }
        let x: Vec<f64> = v.iter().map(|&f| f64::from(f)).collect();
        let mut out = vec![0.0; self.dim];
        self.forward(&x, &mut out);
        EmbeddingVector::new(out.into_iter().map(|f| f as f32).collect())
    }
}

pub fn apply_adapter(adapter: &LinearAdapter, v: &EmbeddingVector) -> Result<EmbeddingVector> {
    adapter.apply(v)
}

#[derive(Serialize, Deserialize)]
struct AdapterFile {
    dim: usize,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    base_model_tag: String,
}

/// Writes `{"dim", "weights" (row-major rows), "bias", "base_model_tag"}`.
pub fn write_adapter(adapter: &LinearAdapter, base_model_tag: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = AdapterFile {
        dim: adapter.dim,
        weights: adapter.weights.chunks(adapter.dim.max(1)).map(<[f64]>::to_vec).collect(),
        bias: adapter.bias.clone(),
        base_model_tag: base_model_tag.to_string(),
    };
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    serde_json::to_writer(&mut w, &file).map_err(|e| Error::io(path, e.into()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Returns the adapter and its `base_model_tag`.
pub fn read_adapter(path: impl AsRef<Path>) -> Result<(LinearAdapter, String)> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let file: AdapterFile = serde_json::from_reader(reader).map_err(|e| Error::Record {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if let Some(row) = file.weights.iter().find(|r| r.len() != file.dim) {
        return Err(Error::DimensionMismatch {
            expected: file.dim,
            found: row.len(),
        });
    }
    let weights = file.weights.into_iter().flatten().collect();
    let adapter = LinearAdapter::from_parts(file.dim, weights, file.bias)?;
    Ok((adapter, file.base_model_tag))
}
