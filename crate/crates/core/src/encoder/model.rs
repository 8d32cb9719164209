use ndarray::{concatenate, s, Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use super::sparse::Propagation;
use crate::error::{Error, Result};
use crate::graph::{EdgeSample, Sign};

/// Pair classes of the classifier, in score-column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class {
    Positive = 0,
    Negative = 1,
    NoEdge = 2,
}

impl From<Sign> for Class {
    fn from(s: Sign) -> Class {
        match s {
            Sign::Positive => Class::Positive,
            Sign::Negative => Class::Negative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairSample {
    pub u: usize,
    pub v: usize,
    pub class: Class,
}

impl From<EdgeSample> for PairSample {
    fn from(e: EdgeSample) -> Self {
        PairSample {
            u: e.u,
            v: e.v,
            class: e.sign.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    /// `embed_dim x in_width`: `2 f` on the first layer, `3 embed_dim` after.
    pub pos: Array2<f64>,
    pub neg: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub layers: Vec<LayerWeights>,
    /// `3 x 4 embed_dim`, one row per [`Class`].
    pub mlg: Array2<f64>,
}

impl Params {
    pub fn zeros_like(other: &Params) -> Params {
        Params {
            layers: other
                .layers
                .iter()
                .map(|l| LayerWeights {
                    pos: Array2::zeros(l.pos.raw_dim()),
                    neg: Array2::zeros(l.neg.raw_dim()),
                })
                .collect(),
            mlg: Array2::zeros(other.mlg.raw_dim()),
        }
    }

    pub fn blocks(&self) -> Vec<&Array2<f64>> {
        let mut out: Vec<&Array2<f64>> = Vec::with_capacity(2 * self.layers.len() + 1);
        for l in &self.layers {
            out.push(&l.pos);
            out.push(&l.neg);
        }
        out.push(&self.mlg);
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out: Vec<&mut Array2<f64>> = Vec::with_capacity(2 * self.layers.len() + 1);
        for l in &mut self.layers {
            out.push(&mut l.pos);
            out.push(&mut l.neg);
        }
        out.push(&mut self.mlg);
        out
    }

    /// Names matching [`Params::blocks`] order.
    pub fn block_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..self.layers.len() {
            out.push(format!("layer{}.pos", i + 1));
            out.push(format!("layer{}.neg", i + 1));
        }
        out.push("mlg".into());
        out
    }

    /// 2-norm of all weights flattened together.
    pub fn norm(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|b| b.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone)]
struct LayerCache {
    pos_input: Array2<f64>,
    neg_input: Array2<f64>,
    pos_out: Array2<f64>,
    neg_out: Array2<f64>,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    pub embeddings: Array2<f64>,
}

fn relu(mut x: Array2<f64>) -> Array2<f64> {
    x.mapv_inplace(|v| v.max(0.0));
    x
}

fn check_finite(layer: usize, arrays: &[&Array2<f64>]) -> Result<()> {
    if arrays.iter().all(|a| a.iter().all(|v| v.is_finite())) {
        Ok(())
    } else {
        Err(Error::NonFinite { layer })
    }
}

pub fn forward_cache(
    prop: &Propagation,
    features: &Array2<f64>,
    params: &Params,
) -> Result<ForwardCache> {
    let mut layers: Vec<LayerCache> = Vec::with_capacity(params.layers.len());
    for (idx, w) in params.layers.iter().enumerate() {
        let (pos_input, neg_input) = match layers.last() {
            None => {
                let h = features.view();
                (
                    concatenate![Axis(1), prop.pos.mul(h), h],
                    concatenate![Axis(1), prop.neg.mul(h), h],
                )
            }
            Some(prev) => {
                let (hp, hn) = (prev.pos_out.view(), prev.neg_out.view());
                (
                    concatenate![Axis(1), prop.pos.mul(hp), prop.neg.mul(hn), hp],
                    concatenate![Axis(1), prop.pos.mul(hn), prop.neg.mul(hp), hn],
                )
            }
        };
        let pos_pre = pos_input.dot(&w.pos.t());
        let neg_pre = neg_input.dot(&w.neg.t());
        // f64::max swallows NaN, so check before the activation
        check_finite(idx + 1, &[&pos_pre, &neg_pre])?;
        let (pos_out, neg_out) = (relu(pos_pre), relu(neg_pre));
        layers.push(LayerCache {
            pos_input,
            neg_input,
            pos_out,
            neg_out,
        });
    }
    let last = layers.last().expect("at least one layer");
    let embeddings = concatenate![Axis(1), last.pos_out, last.neg_out];
    Ok(ForwardCache { layers, embeddings })
}

pub fn forward(prop: &Propagation, features: &Array2<f64>, params: &Params) -> Result<Array2<f64>> {
    Ok(forward_cache(prop, features, params)?.embeddings)
}

/// Mean negative log-likelihood of the classifier over `samples`.
pub fn mlg_loss(z: &Array2<f64>, samples: &[PairSample], mlg: &Array2<f64>) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("mlg loss over an empty sample set".into()));
    }
    let (loss, _) = loss_and_score_grad(z, samples, mlg);
    Ok(loss)
}

/// Returns the loss and `dL/dscores` (one row per sample).
fn loss_and_score_grad(z: &Array2<f64>, samples: &[PairSample], mlg: &Array2<f64>) -> (f64, Array2<f64>) {
    let w = z.ncols();
    let left = z.dot(&mlg.slice(s![.., ..w]).t());
    let right = z.dot(&mlg.slice(s![.., w..]).t());
    let m = samples.len() as f64;
    let mut dscore = Array2::zeros((samples.len(), 3));
    let mut total = 0.0;
    for (k, smp) in samples.iter().enumerate() {
        let mut sc = [0.0f64; 3];
        for (c, v) in sc.iter_mut().enumerate() {
            *v = left[[smp.u, c]] + right[[smp.v, c]];
        }
        let max = sc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = sc.iter().map(|x| (x - max).exp()).sum();
        let log_z = max + sum.ln();
        let y = smp.class as usize;
        total += log_z - sc[y];
        for c in 0..3 {
            let p = (sc[c] - log_z).exp();
            dscore[[k, c]] = (p - if c == y { 1.0 } else { 0.0 }) / m;
        }
    }
    (total / m, dscore)
}

/// Loss plus gradients of the classifier weights and of the embeddings.
pub fn mlg_loss_and_grad(
    z: &Array2<f64>,
    samples: &[PairSample],
    mlg: &Array2<f64>,
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("mlg loss over an empty sample set".into()));
    }
    let (loss, dscore) = loss_and_score_grad(z, samples, mlg);
    let n = z.nrows();
    let w = z.ncols();
    // per-node accumulated score gradients for the left and right slot
    let mut g_left = Array2::<f64>::zeros((n, 3));
    let mut g_right = Array2::<f64>::zeros((n, 3));
    for (k, smp) in samples.iter().enumerate() {
        let d = dscore.row(k);
        g_left.row_mut(smp.u).scaled_add(1.0, &d);
        g_right.row_mut(smp.v).scaled_add(1.0, &d);
    }
    let theta_left = mlg.slice(s![.., ..w]);
    let theta_right = mlg.slice(s![.., w..]);
    let mut d_mlg = Array2::zeros(mlg.raw_dim());
    d_mlg.slice_mut(s![.., ..w]).assign(&g_left.t().dot(z));
    d_mlg.slice_mut(s![.., w..]).assign(&g_right.t().dot(z));
    let dz = g_left.dot(&theta_left) + g_right.dot(&theta_right);
    Ok((loss, d_mlg, dz))
}

fn relu_grad(grad_out: ArrayView2<f64>, out: &Array2<f64>) -> Array2<f64> {
    let mut g = grad_out.to_owned();
    Zip::from(&mut g).and(out).for_each(|g, &o| {
        if o <= 0.0 {
            *g = 0.0;
        }
    });
    g
}

/// Back-propagates `dL/dZ` through the encoder layers into `grads`.
pub fn backward(
    prop: &Propagation,
    params: &Params,
    cache: &ForwardCache,
    dz: &Array2<f64>,
    grads: &mut Params,
) {
    let d = params.layers[0].pos.nrows();
    let mut d_pos = dz.slice(s![.., ..d]).to_owned();
    let mut d_neg = dz.slice(s![.., d..]).to_owned();
    for idx in (0..params.layers.len()).rev() {
        let lc = &cache.layers[idx];
        let w = &params.layers[idx];
        let pre_pos = relu_grad(d_pos.view(), &lc.pos_out);
        let pre_neg = relu_grad(d_neg.view(), &lc.neg_out);
        grads.layers[idx].pos += &pre_pos.t().dot(&lc.pos_input);
        grads.layers[idx].neg += &pre_neg.t().dot(&lc.neg_input);
        if idx == 0 {
            break;
        }
        let dx_pos = pre_pos.dot(&w.pos);
        let dx_neg = pre_neg.dot(&w.neg);
        let block = |x: &Array2<f64>, b: usize| x.slice(s![.., b * d..(b + 1) * d]).to_owned();
        // pos input = [A+ Hp, A- Hn, Hp]; neg input = [A+ Hn, A- Hp, Hn]
        let mut next_pos = prop.pos.mul_transpose(block(&dx_pos, 0).view());
        next_pos += &block(&dx_pos, 2);
        next_pos += &prop.neg.mul_transpose(block(&dx_neg, 1).view());
        let mut next_neg = prop.pos.mul_transpose(block(&dx_neg, 0).view());
        next_neg += &block(&dx_neg, 2);
        next_neg += &prop.neg.mul_transpose(block(&dx_pos, 1).view());
        d_pos = next_pos;
        d_neg = next_neg;
    }
}

/// Full loss and gradient of encoder + classifier on a fixed sample set.
pub fn loss_and_grad(
    prop: &Propagation,
    features: &Array2<f64>,
    params: &Params,
    samples: &[PairSample],
) -> Result<(f64, Params)> {
    let cache = forward_cache(prop, features, params)?;
    let (loss, d_mlg, dz) = mlg_loss_and_grad(&cache.embeddings, samples, &params.mlg)?;
    let mut grads = Params::zeros_like(params);
    grads.mlg = d_mlg;
    backward(prop, params, &cache, &dz, &mut grads);
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SignedGraph;
    use crate::rng::rng_from_seed;
    use ndarray::array;
    use rand::Rng;

    fn e(u: usize, v: usize, s: i8) -> EdgeSample {
        EdgeSample { u, v, sign: Sign::try_from(s).unwrap() }
    }

    fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-scale..scale))
    }

    fn random_params(f: usize, d: usize, layers: usize, rng: &mut impl Rng) -> Params {
        let layers = (0..layers)
            .map(|l| {
                let k = if l == 0 { 2 * f } else { 3 * d };
                LayerWeights {
                    pos: random_matrix(d, k, 0.8, rng),
                    neg: random_matrix(d, k, 0.8, rng),
                }
            })
            .collect();
        Params { layers, mlg: random_matrix(3, 4 * d, 0.8, rng) }
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> SignedGraph {
        let mut rng = rng_from_seed(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push(e(u, v, if rng.gen_bool(0.3) { -1 } else { 1 }));
                }
            }
        }
        SignedGraph::from_edges(n, &edges).unwrap()
    }

    /// Dense reference: explicit matrices, explicit per-node loops.
    fn dense_reference(graph: &SignedGraph, h0: &Array2<f64>, params: &Params) -> Array2<f64> {
        let n = graph.num_nodes();
        let mut ap = Array2::<f64>::zeros((n, n));
        let mut an = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for &j in graph.pos_neighbors(i) {
                ap[[i, j]] = 1.0 / graph.pos_neighbors(i).len() as f64;
            }
            for &j in graph.neg_neighbors(i) {
                an[[i, j]] = 1.0 / graph.neg_neighbors(i).len() as f64;
            }
        }
        let apply = |w: &Array2<f64>, blocks: &[Array2<f64>]| -> Array2<f64> {
            let d = w.nrows();
            let mut out = Array2::zeros((n, d));
            for i in 0..n {
                let x: Vec<f64> = blocks.iter().flat_map(|b| b.row(i).to_vec()).collect();
                for r in 0..d {
                    let mut acc = 0.0;
                    for (c, xv) in x.iter().enumerate() {
                        acc += w[[r, c]] * xv;
                    }
                    out[[i, r]] = acc.max(0.0);
                }
            }
            out
        };
        let mut hp = apply(&params.layers[0].pos, &[ap.dot(h0), h0.clone()]);
        let mut hn = apply(&params.layers[0].neg, &[an.dot(h0), h0.clone()]);
        for l in &params.layers[1..] {
            let np = apply(&l.pos, &[ap.dot(&hp), an.dot(&hn), hp.clone()]);
            let nn = apply(&l.neg, &[ap.dot(&hn), an.dot(&hp), hn.clone()]);
            hp = np;
            hn = nn;
        }
        concatenate![Axis(1), hp, hn]
    }

    #[test]
    fn matches_dense_reference_on_path() {
        let g = SignedGraph::from_edges(3, &[e(0, 1, 1), e(1, 2, -1)]).unwrap();
        let h0 = array![[0.1, -0.2], [0.3, 0.05], [-0.4, 0.2]];
        let mut rng = rng_from_seed(5);
        let params = random_params(2, 2, 2, &mut rng);
        let z = forward(&Propagation::new(&g), &h0, &params).unwrap();
        let reference = dense_reference(&g, &h0, &params);
        for (a, b) in z.iter().zip(reference.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_dense_reference_random() {
        for seed in 0..10 {
            let n = 5 + seed as usize;
            let g = random_graph(n, 0.35, seed);
            let mut rng = rng_from_seed(100 + seed);
            let h0 = random_matrix(n, 4, 1.0, &mut rng);
            let params = random_params(4, 3, 1 + (seed as usize % 3), &mut rng);
            let z = forward(&Propagation::new(&g), &h0, &params).unwrap();
            let reference = dense_reference(&g, &h0, &params);
            for (a, b) in z.iter().zip(reference.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn no_negative_edges_means_self_only_negative_track() {
        let g = SignedGraph::from_edges(3, &[e(0, 1, 1), e(1, 2, 1)]).unwrap();
        let h0 = array![[0.5, -0.3], [0.2, 0.9], [-0.7, 0.4]];
        let mut rng = rng_from_seed(9);
        let params = random_params(2, 2, 1, &mut rng);
        let z = forward(&Propagation::new(&g), &h0, &params).unwrap();
        let w = &params.layers[0].neg;
        for i in 0..3 {
            for r in 0..2 {
                let self_part: f64 = (0..2).map(|c| w[[r, 2 + c]] * h0[[i, c]]).sum();
                assert!((z[[i, 2 + r]] - self_part.max(0.0)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        let n = 8;
        let g = random_graph(n, 0.4, 3);
        let mut rng = rng_from_seed(4);
        let h0 = random_matrix(n, 3, 1.0, &mut rng);
        let params = random_params(3, 3, 2, &mut rng);
        let perm: Vec<usize> = vec![3, 7, 0, 5, 1, 6, 2, 4];
        let pe: Vec<_> = g
            .edges()
            .iter()
            .map(|x| EdgeSample { u: perm[x.u], v: perm[x.v], sign: x.sign })
            .collect();
        let gp = SignedGraph::from_edges(n, &pe).unwrap();
        let mut hp = Array2::zeros(h0.raw_dim());
        for i in 0..n {
            hp.row_mut(perm[i]).assign(&h0.row(i));
        }
        let z = forward(&Propagation::new(&g), &h0, &params).unwrap();
        let zp = forward(&Propagation::new(&gp), &hp, &params).unwrap();
        for i in 0..n {
            for c in 0..z.ncols() {
                assert!((z[[i, c]] - zp[[perm[i], c]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_finite_names_layer() {
        let g = SignedGraph::from_edges(2, &[e(0, 1, 1)]).unwrap();
        let h0 = array![[1.0, 1.0], [1.0, 1.0]];
        let mut rng = rng_from_seed(1);
        let mut params = random_params(2, 2, 2, &mut rng);
        params.layers[1].pos.fill(f64::NAN);
        match forward(&Propagation::new(&g), &h0, &params) {
            Err(Error::NonFinite { layer }) => assert_eq!(layer, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_theta_gives_ln3() {
        let z = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]];
        let mlg = Array2::zeros((3, 4));
        let samples = [
            PairSample { u: 0, v: 1, class: Class::Positive },
            PairSample { u: 1, v: 2, class: Class::NoEdge },
        ];
        let loss = mlg_loss(&z, &samples, &mlg).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-15);
        assert!(mlg_loss(&z, &[], &mlg).is_err());
    }

    #[test]
    fn confident_correct_class_loss_vanishes() {
        let z = array![[1.0], [1.0]];
        let mut mlg = Array2::zeros((3, 2));
        mlg[[1, 0]] = 40.0;
        mlg[[1, 1]] = 40.0;
        let samples = [PairSample { u: 0, v: 1, class: Class::Negative }];
        assert!(mlg_loss(&z, &samples, &mlg).unwrap() < 1e-30);
    }

    #[test]
    fn hand_evaluated_loss() {
        // z rows are scalars; theta rows: + -> (1, 0), - -> (0, 1), ? -> (0, 0)
        let z = array![[1.0], [2.0], [0.0]];
        let mlg = array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        let samples = [
            PairSample { u: 0, v: 1, class: Class::Positive }, // scores (1, 2, 0)
            PairSample { u: 1, v: 0, class: Class::Negative }, // scores (2, 1, 0)
            PairSample { u: 2, v: 1, class: Class::NoEdge },   // scores (0, 2, 0)
            PairSample { u: 1, v: 2, class: Class::Positive }, // scores (2, 0, 0)
        ];
        let e = std::f64::consts::E;
        let lse = |a: f64, b: f64, c: f64| (a.exp() + b.exp() + c.exp()).ln();
        let expected = ((lse(1.0, 2.0, 0.0) - 1.0)
            + (lse(2.0, 1.0, 0.0) - 1.0)
            + (lse(0.0, 2.0, 0.0) - 0.0)
            + (lse(2.0, 0.0, 0.0) - 2.0))
            / 4.0;
        // (ln(e + e^2 + 1) - 1) * 2 + ln(2 + e^2) + ln(e^2 + 2) - 2, all over 4
        let closed = (2.0 * ((e + e * e + 1.0).ln() - 1.0) + 2.0 * (2.0 + e * e).ln() - 2.0) / 4.0;
        assert!((expected - closed).abs() < 1e-12);
        let loss = mlg_loss(&z, &samples, &mlg).unwrap();
        assert!((loss - closed).abs() < 1e-12, "{loss} vs {closed}");
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..4u64 {
            let n = 10;
            let g = random_graph(n, 0.4, 40 + seed);
            let mut rng = rng_from_seed(seed);
            let h0 = random_matrix(n, 3, 1.0, &mut rng);
            let params = random_params(3, 3, 2, &mut rng);
            let mut samples: Vec<PairSample> = g.edges().into_iter().map(Into::into).collect();
            samples.push(PairSample { u: 0, v: 9, class: Class::NoEdge });
            samples.push(PairSample { u: 4, v: 2, class: Class::NoEdge });
            let prop = Propagation::new(&g);
            let (_, grads) = loss_and_grad(&prop, &h0, &params, &samples).unwrap();
            let h = 1e-5;
            let mut worst = 0.0f64;
            let n_blocks = params.blocks().len();
            for b in 0..n_blocks {
                let shape = params.blocks()[b].raw_dim();
                for idx in ndarray::indices(shape) {
                    let mut plus = params.clone();
                    plus.blocks_mut()[b][idx] += h;
                    let mut minus = params.clone();
                    minus.blocks_mut()[b][idx] -= h;
                    let lp = loss_and_grad(&prop, &h0, &plus, &samples).unwrap().0;
                    let lm = loss_and_grad(&prop, &h0, &minus, &samples).unwrap().0;
                    let numeric = (lp - lm) / (2.0 * h);
                    worst = worst.max(rel_err(grads.blocks()[b][idx], numeric));
                }
            }
            assert!(worst < 1e-4, "seed {seed}: max rel err {worst}");
        }
    }
}
