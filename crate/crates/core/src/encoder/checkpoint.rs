//! Flat binary checkpoint of an [`EncoderState`].
//!
//! All integers and floats are little endian. Layout:
//!
//! | field             | type      |
//! |-------------------|-----------|
//! | magic `SGAENCK\0` | `[u8; 8]` |
//! | version (= 1)     | `u32`     |
//! | layers `L`        | `u32`     |
//! | nodes `n`         | `u64`     |
//! | feature dim `f`   | `u64`     |
//! | embed dim `d`     | `u64`     |
//! | seed              | `u64`     |
//! | configured epochs | `u64`     |
//! | epochs trained    | `u64`     |
//! | learning rate     | `f64`     |
//! | optimizer         | `u8` (0 adam, 1 sgd) |
//! | input features    | `u8` (0 seeded-random, 1 adjacency-rows) |
//! | initial weight norm | `f64`   |
//!
//! followed by row-major `f64` blocks: features `n x f`; for each layer the
//! positive then negative weights (`d x 2f` on layer 1, `d x 3d` after);
//! classifier weights `3 x 4d`; embeddings `n x 2d`.

use std::io::{Read, Write};

use ndarray::Array2;
use serde_json::json;

use super::model::{LayerWeights, Params};
use super::{EncoderConfig, EncoderState, InputFeatures, OptimizerKind};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"SGAENCK\0";
pub const CHECKPOINT_VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> Error {
    Error::Checkpoint(e.to_string())
}

fn write_block<W: Write>(out: &mut W, block: &Array2<f64>) -> Result<()> {
    for x in block.iter() {
        out.write_all(&x.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_checkpoint<W: Write>(state: &EncoderState, mut out: W) -> Result<()> {
    let cfg = &state.config;
    let mut header = Vec::with_capacity(80);
    header.extend_from_slice(&CHECKPOINT_MAGIC);
    header.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    header.extend_from_slice(&(state.params.layers.len() as u32).to_le_bytes());
    for v in [
        state.num_nodes() as u64,
        state.features.ncols() as u64,
        cfg.embed_dim as u64,
        cfg.seed,
        cfg.epochs as u64,
        state.epochs_trained as u64,
    ] {
        header.extend_from_slice(&v.to_le_bytes());
    }
    header.extend_from_slice(&cfg.learning_rate.to_le_bytes());
    header.push(match cfg.optimizer {
        OptimizerKind::Adam => 0,
        OptimizerKind::Sgd => 1,
    });
    header.push(match cfg.input_features {
        InputFeatures::SeededRandom => 0,
        InputFeatures::AdjacencyRows => 1,
    });
    header.extend_from_slice(&state.init_weight_norm.to_le_bytes());
    out.write_all(&header).map_err(io_err)?;

    write_block(&mut out, &state.features)?;
    for l in &state.params.layers {
        write_block(&mut out, &l.pos)?;
        write_block(&mut out, &l.neg)?;
    }
    write_block(&mut out, &state.params.mlg)?;
    write_block(&mut out, &state.embeddings)?;
    out.flush().map_err(io_err)
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Checkpoint(format!("truncated checkpoint: {e}")))?;
        Ok(buf)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("dimension overflow".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn block(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Checkpoint("dimension overflow".into()))?;
        let mut data = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            data.push(self.f64()?);
        }
        Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<EncoderState> {
    let mut r = Reader { inner: input };
    if r.bytes::<8>()? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(r.bytes()?);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let layers = u32::from_le_bytes(r.bytes()?) as usize;
    let n = r.usize()?;
    let f = r.usize()?;
    let d = r.usize()?;
    let seed = r.u64()?;
    let epochs = r.usize()?;
    let epochs_trained = r.usize()?;
    let learning_rate = r.f64()?;
    let [opt, feat] = r.bytes::<2>()?;
    let optimizer = match opt {
        0 => OptimizerKind::Adam,
        1 => OptimizerKind::Sgd,
        other => return Err(Error::Checkpoint(format!("unknown optimizer tag {other}"))),
    };
    let input_features = match feat {
        0 => InputFeatures::SeededRandom,
        1 => InputFeatures::AdjacencyRows,
        other => return Err(Error::Checkpoint(format!("unknown feature tag {other}"))),
    };
    let init_weight_norm = r.f64()?;
    if layers == 0 {
        return Err(Error::Checkpoint("zero layers".into()));
    }

    let features = r.block(n, f)?;
    let mut weights = Vec::with_capacity(layers);
    for l in 0..layers {
        let width = if l == 0 { 2 * f } else { 3 * d };
        let pos = r.block(d, width)?;
        let neg = r.block(d, width)?;
        weights.push(LayerWeights { pos, neg });
    }
    let mlg = r.block(3, 4 * d)?;
    let embeddings = r.block(n, 2 * d)?;
    Ok(EncoderState {
        config: EncoderConfig {
            embed_dim: d,
            layers,
            learning_rate,
            epochs,
            optimizer,
            seed,
            input_features,
        },
        params: Params { layers: weights, mlg },
        features,
        embeddings,
        init_weight_norm,
        loss_history: Vec::new(),
        epochs_trained,
    })
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

/// Human-readable export with the same content as the binary checkpoint
/// plus the loss history.
pub fn to_json(state: &EncoderState) -> serde_json::Value {
    json!({
        "config": state.config,
        "epochs_trained": state.epochs_trained,
        "init_weight_norm": state.init_weight_norm,
        "weight_norm": state.params.norm(),
        "loss_history": state.loss_history,
        "layers": state.params.layers.iter().map(|l| json!({
            "pos": rows(&l.pos),
            "neg": rows(&l.neg),
        })).collect::<Vec<_>>(),
        "mlg": rows(&state.params.mlg),
        "embeddings": rows(&state.embeddings),
    })
}
