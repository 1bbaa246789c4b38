//! Triplet-loss training of a [`LinearAdapter`] over frozen base embeddings.
//!
//! The anchor (oracle query) stays in the base space; positive and negative
//! (options-aware and wrong-options queries) pass through the adapter:
//!
//! ```text
//! L = max(0, ‖a − f(p)‖ − ‖a − f(n)‖ + margin),   f(x) = W·x + b
//! ```
//!
//! With `u_x = (a − f(x)) / max(‖a − f(x)‖, ε)`, the active-hinge gradient is
//! `∂L/∂W = −u_p·pᵀ + u_n·nᵀ` and `∂L/∂b = −u_p + u_n`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adapter::LinearAdapter;
use crate::error::{Error, Result};
use crate::query::{query_id, QueryKind, QueryMode};
use crate::store::{EmbeddingStore, EmbeddingVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub distance_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            learning_rate: 1e-4,
            batch_size: 8,
            epochs: 1,
            seed: 42,
            distance_epsilon: 1e-12,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return bad("margin must be a non-negative finite number");
        }
        // Zero is accepted: it leaves the adapter at identity.
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be a non-negative finite number");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.distance_epsilon.is_finite() && self.distance_epsilon > 0.0) {
            return bad("distance_epsilon must be positive");
        }
        Ok(())
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

pub fn triplet_loss(
    anchor: &EmbeddingVector,
    positive: &EmbeddingVector,
    negative: &EmbeddingVector,
    margin: f64,
) -> Result<f64> {
    check_dim(anchor.dim(), positive.dim())?;
    check_dim(anchor.dim(), negative.dim())?;
    let (a, p, n) = (widen(anchor), widen(positive), widen(negative));
    Ok((l2(&a, &p) - l2(&a, &n) + margin).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletGradient {
    pub loss: f64,
    /// Row-major, `dim × dim`.
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
}

pub fn triplet_loss_grad(
    anchor: &EmbeddingVector,
    positive_raw: &EmbeddingVector,
    negative_raw: &EmbeddingVector,
    adapter: &LinearAdapter,
    margin: f64,
    distance_epsilon: f64,
) -> Result<TripletGradient> {
    let dim = adapter.dim();
    check_dim(dim, anchor.dim())?;
    check_dim(dim, positive_raw.dim())?;
    check_dim(dim, negative_raw.dim())?;
    let mut scratch = Scratch::new(dim);
    let mut grad = TripletGradient {
        loss: 0.0,
        d_weights: vec![0.0; dim * dim],
        d_bias: vec![0.0; dim],
    };
    grad.loss = scratch.accumulate(
        &widen(anchor),
        &widen(positive_raw),
        &widen(negative_raw),
        adapter,
        margin,
        distance_epsilon,
        &mut grad.d_weights,
        &mut grad.d_bias,
    );
    Ok(grad)
}

struct Scratch {
    fp: Vec<f64>,
    fn_: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            fp: vec![0.0; dim],
            fn_: vec![0.0; dim],
        }
    }

    /// Adds this triplet's gradient into `dw`/`db` and returns its loss.
    #[allow(clippy::too_many_arguments)]
    fn accumulate(
        &mut self,
        a: &[f64],
        p: &[f64],
        n: &[f64],
        adapter: &LinearAdapter,
        margin: f64,
        eps: f64,
        dw: &mut [f64],
        db: &mut [f64],
    ) -> f64 {
        adapter.forward(p, &mut self.fp);
        adapter.forward(n, &mut self.fn_);
        let dp = l2(a, &self.fp);
        let dn = l2(a, &self.fn_);
        let loss = (dp - dn + margin).max(0.0);
        if loss == 0.0 {
            return 0.0;
        }
        let (dp, dn) = (dp.max(eps), dn.max(eps));
        let dim = a.len();
        // u_p, u_n reuse the forward buffers.
        for ((up, un), &ai) in self.fp.iter_mut().zip(self.fn_.iter_mut()).zip(a) {
            *up = (ai - *up) / dp;
            *un = (ai - *un) / dn;
        }
        for i in 0..dim {
            let (up, un) = (self.fp[i], self.fn_[i]);
            let row = &mut dw[i * dim..(i + 1) * dim];
            for j in 0..dim {
                row[j] += -up * p[j] + un * n[j];
            }
            db[i] += -up + un;
        }
        loss
    }
}

/// Ids of (anchor, positive, negative) vectors in a base store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletIds {
    pub anchor: String,
    pub positive: String,
    pub negative: String,
}

impl TripletIds {
    /// The oracle / options-aware / wrong-options query ids of a sample.
    pub fn for_sample(sample_id: &str) -> Self {
        Self {
            anchor: query_id(sample_id, QueryKind::Mode(QueryMode::Oracle)),
            positive: query_id(sample_id, QueryKind::Mode(QueryMode::OptionsAware)),
            negative: query_id(sample_id, QueryKind::Negative),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub adapter: LinearAdapter,
    /// Mean triplet loss per epoch, each loss taken before its batch's update.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch gradient descent from the identity adapter.
pub fn train_adapter(triplets: &[TripletIds], base: &EmbeddingStore, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if triplets.is_empty() {
        return Err(Error::Empty("triplet list"));
    }
    let fetch = |id: &str| base.require(id).map(|v| widen(v));
    let resolved = triplets
        .iter()
        .map(|t| Ok([fetch(&t.anchor)?, fetch(&t.positive)?, fetch(&t.negative)?]))
        .collect::<Result<Vec<_>>>()?;

    let dim = base.dim();
    let mut adapter = LinearAdapter::identity(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..resolved.len()).collect();
    let mut scratch = Scratch::new(dim);
    let mut dw = vec![0.0; dim * dim];
    let mut db = vec![0.0; dim];
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            dw.fill(0.0);
            db.fill(0.0);
            for &idx in batch {
                let [a, p, n] = &resolved[idx];
                loss_sum += scratch.accumulate(
                    a,
                    p,
                    n,
                    &adapter,
                    config.margin,
                    config.distance_epsilon,
                    &mut dw,
                    &mut db,
                );
            }
            let step = config.learning_rate / batch.len() as f64;
            let (w, b) = adapter.parts_mut();
            for (w, g) in w.iter_mut().zip(&dw) {
                *w -= step * g;
            }
            for (b, g) in b.iter_mut().zip(&db) {
                *b -= step * g;
            }
        }
        epoch_losses.push(loss_sum / resolved.len() as f64);
    }

    if !adapter.is_finite() {
        return Err(Error::InvalidConfig("training diverged to non-finite weights; lower the learning rate".into()));
    }
    Ok(TrainOutcome { adapter, epoch_losses })
}
