//! SGCN encoder with a three-class pair classifier.
//!
//! Each layer keeps a positive and a negative embedding track. The first
//! layer aggregates the input features over positive (resp. negative)
//! neighbours; deeper layers follow balance theory, so a friend's friend and
//! an enemy's enemy feed the positive track while the mixed paths feed the
//! negative track. The final embedding of a node is the concatenation of both
//! tracks, and a multinomial logistic classifier over the concatenated
//! embeddings of a node pair predicts `+`, `-` or no edge.
//!
//! Gradients are derived by hand for this fixed architecture.

mod checkpoint;
mod model;
mod sparse;
mod train;

pub use checkpoint::{read_checkpoint, to_json, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{
    backward, forward, forward_cache, loss_and_grad, mlg_loss, mlg_loss_and_grad, Class, ForwardCache, LayerWeights,
    PairSample, Params,
};
pub use sparse::{Propagation, RowNormalized};
pub use train::{init_state, train_encoder, Optimizer as OptimizerState, Trainer};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFeatures {
    /// Uniform `[-1, 1]` matrix of width `embed_dim`.
    SeededRandom,
    /// Rows of the signed adjacency matrix; `|V|` wide, small graphs only.
    AdjacencyRows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub embed_dim: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub input_features: InputFeatures,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            embed_dim: 64,
            layers: 2,
            learning_rate: 0.01,
            epochs: 300,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            input_features: InputFeatures::SeededRandom,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(Error::Config("encoder.layers must be >= 1".into()));
        }
        if self.embed_dim < 2 {
            return Err(Error::Config("encoder.embed_dim must be >= 2".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("encoder.learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeProbabilities {
    pub p_pos: f64,
    pub p_neg: f64,
    pub p_none: f64,
}

impl EdgeProbabilities {
    pub fn from_scores(scores: [f64; 3]) -> Self {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e = scores.map(|s| (s - max).exp());
        let sum: f64 = e.iter().sum();
        EdgeProbabilities {
            p_pos: e[0] / sum,
            p_neg: e[1] / sum,
            p_none: e[2] / sum,
        }
    }
}

/// Encoder weights, input features and the most recent embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderState {
    pub config: EncoderConfig,
    pub params: Params,
    /// `H^(0)`, `|V| x feature_dim`.
    pub features: Array2<f64>,
    /// `Z = [H_pos^(L), H_neg^(L)]`, `|V| x 2 embed_dim`.
    pub embeddings: Array2<f64>,
    /// 2-norm of all weights at initialization.
    pub init_weight_norm: f64,
    pub loss_history: Vec<f64>,
    pub epochs_trained: usize,
}

impl EncoderState {
    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_trained(&self) -> bool {
        self.epochs_trained > 0
    }

    /// Concatenated pair embedding `[z_u, z_v]`.
    pub fn pair_features(&self, u: usize, v: usize) -> Vec<f64> {
        let mut out = self.embeddings.row(u).to_vec();
        out.extend(self.embeddings.row(v).iter());
        out
    }

    pub fn pair_scorer(&self) -> PairScorer {
        PairScorer::new(&self.embeddings, &self.params.mlg)
    }
}

pub fn predict_edge_probs(state: &EncoderState, u: usize, v: usize) -> Result<EdgeProbabilities> {
    if u == v {
        return Err(Error::InvalidArgument(format!("cannot score self pair ({u}, {u})")));
    }
    let n = state.num_nodes();
    if u >= n || v >= n {
        return Err(Error::InvalidArgument(format!("node out of range for {n} nodes")));
    }
    let z = &state.embeddings;
    let w = z.ncols();
    let theta = &state.params.mlg;
    let dot = |row: ArrayView1<f64>, c: usize, offset: usize| -> f64 {
        row.iter().zip(theta.row(c).iter().skip(offset)).map(|(a, b)| a * b).sum()
    };
    let mut scores = [0.0; 3];
    for (c, s) in scores.iter_mut().enumerate() {
        *s = dot(z.row(u), c, 0) + dot(z.row(v), c, w);
    }
    Ok(EdgeProbabilities::from_scores(scores))
}

/// Per-node projections of the classifier so that scoring a pair costs
/// six additions: `score_c(u, v) = left[u, c] + right[v, c]`.
#[derive(Debug, Clone)]
pub struct PairScorer {
    left: Array2<f64>,
    right: Array2<f64>,
}

impl PairScorer {
    pub fn new(embeddings: &Array2<f64>, mlg: &Array2<f64>) -> Self {
        let w = embeddings.ncols();
        let left = embeddings.dot(&mlg.slice(ndarray::s![.., ..w]).t());
        let right = embeddings.dot(&mlg.slice(ndarray::s![.., w..]).t());
        PairScorer { left, right }
    }

    pub fn scores(&self, u: usize, v: usize) -> [f64; 3] {
        let (l, r) = (self.left.row(u), self.right.row(v));
        [l[0] + r[0], l[1] + r[1], l[2] + r[2]]
    }

    pub fn probs(&self, u: usize, v: usize) -> EdgeProbabilities {
        EdgeProbabilities::from_scores(self.scores(u, v))
    }
}
