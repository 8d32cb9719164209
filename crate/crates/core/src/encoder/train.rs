use ndarray::{Array2, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::model::{forward, loss_and_grad, Class, LayerWeights, PairSample, Params};
use super::sparse::Propagation;
use super::{EncoderConfig, EncoderState, InputFeatures, OptimizerKind};
use crate::error::{Error, Result};
use crate::graph::{EdgeSample, SignedGraph};
use crate::rng::{derive_seed, rng_from_seed};

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..=bound))
}

fn input_features(graph: &SignedGraph, config: &EncoderConfig) -> Array2<f64> {
    let n = graph.num_nodes();
    match config.input_features {
        InputFeatures::SeededRandom => {
            let mut rng = rng_from_seed(derive_seed(config.seed, "features"));
            Array2::from_shape_fn((n, config.embed_dim), |_| rng.gen_range(-1.0..=1.0))
        }
        InputFeatures::AdjacencyRows => {
            let mut h = Array2::zeros((n, n));
            for i in 0..n {
                for &(j, s) in graph.neighbors(i) {
                    h[[i, j]] = s.as_f64();
                }
            }
            h
        }
    }
}

/// Fresh weights and input features for `graph`. Embeddings are computed
/// with the initial weights.
pub fn init_state(graph: &SignedGraph, config: &EncoderConfig) -> Result<EncoderState> {
    config.validate()?;
    let features = input_features(graph, config);
    let d = config.embed_dim;
    let f = features.ncols();
    let mut rng = rng_from_seed(derive_seed(config.seed, "weights"));
    let layers = (0..config.layers)
        .map(|l| {
            let width = if l == 0 { 2 * f } else { 3 * d };
            LayerWeights {
                pos: glorot(d, width, &mut rng),
                neg: glorot(d, width, &mut rng),
            }
        })
        .collect();
    let params = Params {
        layers,
        mlg: glorot(3, 4 * d, &mut rng),
    };
    let embeddings = forward(&Propagation::new(graph), &features, &params)?;
    Ok(EncoderState {
        config: config.clone(),
        init_weight_norm: params.norm(),
        params,
        features,
        embeddings,
        loss_history: Vec::new(),
        epochs_trained: 0,
    })
}

#[derive(Debug, Clone)]
pub enum Optimizer {
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        step: i32,
        m: Params,
        v: Params,
    },
    Sgd {
        lr: f64,
    },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: &Params) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam {
                lr,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                step: 0,
                m: Params::zeros_like(params),
                v: Params::zeros_like(params),
            },
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
        }
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params) {
        match self {
            Optimizer::Sgd { lr } => {
                for (p, g) in params.blocks_mut().into_iter().zip(grads.blocks()) {
                    p.scaled_add(-*lr, g);
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
                step,
                m,
                v,
            } => {
                *step += 1;
                let (b1, b2) = (*beta1, *beta2);
                let c1 = 1.0 - b1.powi(*step);
                let c2 = 1.0 - b2.powi(*step);
                let (lr, eps) = (*lr, *eps);
                let blocks = params
                    .blocks_mut()
                    .into_iter()
                    .zip(grads.blocks())
                    .zip(m.blocks_mut())
                    .zip(v.blocks_mut());
                for (((p, g), m), v) in blocks {
                    Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                        *m = b1 * *m + (1.0 - b1) * g;
                        *v = b2 * *v + (1.0 - b2) * g * g;
                        let m_hat = *m / c1;
                        let v_hat = *v / c2;
                        *p -= lr * m_hat / (v_hat.sqrt() + eps);
                    });
                }
            }
        }
    }
}

/// Full-batch training driver. Each [`Trainer::epoch`] call takes the
/// labeled edges for that epoch and adds the same number of freshly sampled
/// unlinked pairs as the no-edge class.
pub struct Trainer<'g> {
    graph: &'g SignedGraph,
    prop: Propagation,
    state: EncoderState,
    optimizer: Optimizer,
    rng: ChaCha8Rng,
}

impl<'g> Trainer<'g> {
    pub fn new(graph: &'g SignedGraph, config: &EncoderConfig) -> Result<Self> {
        let state = init_state(graph, config)?;
        let optimizer = Optimizer::new(config.optimizer, config.learning_rate, &state.params);
        Ok(Trainer {
            graph,
            prop: Propagation::new(graph),
            rng: rng_from_seed(derive_seed(config.seed, "unlinked-pairs")),
            state,
            optimizer,
        })
    }

    pub fn state(&self) -> &EncoderState {
        &self.state
    }

    /// Samples `count` node pairs with no edge between them.
    pub fn sample_unlinked(&mut self, count: usize) -> Vec<PairSample> {
        let n = self.graph.num_nodes();
        let mut out = Vec::with_capacity(count);
        if n < 2 {
            return out;
        }
        let max_attempts = count.saturating_mul(100).max(1000);
        let mut attempts = 0;
        while out.len() < count && attempts < max_attempts {
            attempts += 1;
            let u = self.rng.gen_range(0..n);
            let v = self.rng.gen_range(0..n);
            if u != v && !self.graph.has_edge(u, v) {
                out.push(PairSample { u, v, class: Class::NoEdge });
            }
        }
        out
    }

    /// One optimizer step on `labeled` plus resampled no-edge pairs. Returns
    /// the loss before the step.
    pub fn epoch(&mut self, labeled: &[EdgeSample]) -> Result<f64> {
        if labeled.is_empty() {
            return Err(Error::InvalidArgument("training epoch with no labeled edges".into()));
        }
        // summation order independent of how the caller ordered the edges
        let mut samples: Vec<PairSample> = labeled.iter().copied().map(Into::into).collect();
        samples.sort_unstable();
        let unlinked = self.sample_unlinked(labeled.len());
        samples.extend(unlinked);

        let epoch = self.state.epochs_trained;
        let (loss, grads) = loss_and_grad(&self.prop, &self.state.features, &self.state.params, &samples)
            .map_err(|e| match e {
                Error::NonFinite { .. } => Error::Diverged { epoch, loss: f64::NAN },
                other => other,
            })?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        self.optimizer.step(&mut self.state.params, &grads);
        if !self.state.params.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        self.state.loss_history.push(loss);
        self.state.epochs_trained += 1;
        Ok(loss)
    }

    /// Recomputes embeddings with the final weights.
    pub fn finish(mut self) -> Result<EncoderState> {
        self.state.embeddings = forward(&self.prop, &self.state.features, &self.state.params)?;
        Ok(self.state)
    }
}

pub fn train_encoder(
    graph: &SignedGraph,
    train: &[EdgeSample],
    config: &EncoderConfig,
) -> Result<EncoderState> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty edge set".into()));
    }
    let mut trainer = Trainer::new(graph, config)?;
    for _ in 0..config.epochs {
        trainer.epoch(train)?;
    }
    trainer.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{mlg_loss, predict_edge_probs};
    use crate::graph::Sign;

    fn e(u: usize, v: usize, s: i8) -> EdgeSample {
        EdgeSample { u, v, sign: Sign::try_from(s).unwrap() }
    }

    /// Two factions {0,1,2} and {3,4,5}: positive inside, negative across.
    fn factions() -> (SignedGraph, Vec<EdgeSample>) {
        let edges = vec![
            e(0, 1, 1),
            e(1, 2, 1),
            e(0, 2, 1),
            e(3, 4, 1),
            e(4, 5, 1),
            e(0, 3, -1),
            e(2, 5, -1),
        ];
        (SignedGraph::from_edges(6, &edges).unwrap(), edges)
    }

    fn small_config() -> EncoderConfig {
        EncoderConfig { embed_dim: 8, epochs: 60, seed: 3, ..Default::default() }
    }

    #[test]
    fn glorot_bound() {
        let bound = (6.0f64 / 128.0).sqrt();
        assert!((bound - 0.2165).abs() < 5e-5);
        let mut rng = rng_from_seed(1);
        let w = glorot(64, 64, &mut rng);
        assert!(w.iter().all(|x| x.abs() <= bound));
    }

    #[test]
    fn init_is_deterministic_with_documented_shapes() {
        let (g, _) = factions();
        let cfg = EncoderConfig { embed_dim: 64, ..Default::default() };
        let a = init_state(&g, &cfg).unwrap();
        let b = init_state(&g, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.params.layers.len(), 2);
        assert_eq!(a.params.layers[0].pos.dim(), (64, 128));
        assert_eq!(a.params.layers[0].neg.dim(), (64, 128));
        assert_eq!(a.params.layers[1].pos.dim(), (64, 192));
        assert_eq!(a.params.mlg.dim(), (3, 256));
        assert_eq!(a.embeddings.dim(), (6, 128));
        assert_eq!(a.features.dim(), (6, 64));
        let c = init_state(&g, &EncoderConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn adjacency_features() {
        let (g, _) = factions();
        let cfg = EncoderConfig { input_features: InputFeatures::AdjacencyRows, embed_dim: 4, ..Default::default() };
        let s = init_state(&g, &cfg).unwrap();
        assert_eq!(s.features.dim(), (6, 6));
        assert_eq!(s.features[[0, 3]], -1.0);
        assert_eq!(s.features[[0, 1]], 1.0);
        assert_eq!(s.params.layers[0].pos.dim(), (4, 12));
    }

    #[test]
    fn learns_below_uniform() {
        let (g, train) = factions();
        let state = train_encoder(&g, &train, &small_config()).unwrap();
        let last = *state.loss_history.last().unwrap();
        assert!(last < 3f64.ln(), "{last}");
        let p = predict_edge_probs(&state, 0, 1).unwrap();
        assert!((p.p_pos + p.p_neg + p.p_none - 1.0).abs() < 1e-9);
        assert!(predict_edge_probs(&state, 2, 2).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let (g, train) = factions();
        let a = train_encoder(&g, &train, &small_config()).unwrap();
        let b = train_encoder(&g, &train, &small_config()).unwrap();
        assert_eq!(a.loss_history, b.loss_history);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn edge_order_does_not_matter() {
        let (g, train) = factions();
        let mut rev = train.clone();
        rev.reverse();
        let a = train_encoder(&g, &train, &small_config()).unwrap();
        let b = train_encoder(&g, &rev, &small_config()).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn empty_train_rejected() {
        let (g, _) = factions();
        assert!(train_encoder(&g, &[], &small_config()).is_err());
    }

    #[test]
    fn divergence_reports_epoch() {
        let (g, train) = factions();
        let cfg = EncoderConfig { learning_rate: 1e300, optimizer: OptimizerKind::Sgd, ..small_config() };
        match train_encoder(&g, &train, &cfg) {
            Err(Error::Diverged { epoch, .. }) => assert!(epoch < 60),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn unlinked_pairs_are_non_edges() {
        let (g, _) = factions();
        let mut t = Trainer::new(&g, &small_config()).unwrap();
        let pairs = t.sample_unlinked(50);
        assert_eq!(pairs.len(), 50);
        assert!(pairs.iter().all(|p| p.u != p.v && !g.has_edge(p.u, p.v)));
    }

    #[test]
    fn loss_non_increasing_small_lr() {
        // 20-node two-faction graph; the no-edge set is held fixed so the
        // objective does not change between steps.
        let mut edges = Vec::new();
        for u in 0..20 {
            for v in u + 1..20 {
                if (u * 7 + v * 3) % 5 == 0 {
                    let s = if (u < 10) == (v < 10) { 1 } else { -1 };
                    edges.push(e(u, v, s));
                }
            }
        }
        let g = SignedGraph::from_edges(20, &edges).unwrap();
        let cfg = EncoderConfig { embed_dim: 8, learning_rate: 1e-3, seed: 11, ..Default::default() };
        let mut state = init_state(&g, &cfg).unwrap();
        let prop = Propagation::new(&g);
        let mut samples: Vec<PairSample> = edges.iter().copied().map(Into::into).collect();
        let mut trainer = Trainer::new(&g, &cfg).unwrap();
        samples.extend(trainer.sample_unlinked(edges.len()));
        let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &state.params);
        let mut prev = f64::INFINITY;
        for _ in 0..10 {
            let (loss, grads) = loss_and_grad(&prop, &state.features, &state.params, &samples).unwrap();
            assert!(loss <= prev + 1e-12, "{loss} > {prev}");
            prev = loss;
            opt.step(&mut state.params, &grads);
        }
        let z = forward(&prop, &state.features, &state.params).unwrap();
        assert!(mlg_loss(&z, &samples, &state.params.mlg).unwrap() <= prev);
    }
}
