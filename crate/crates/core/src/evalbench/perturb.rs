//! Uniform random perturbations of a training edge set.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ceil_fraction, EdgeSample, Sign};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    DropEdge,
    AddPos,
    DelPos,
    AddNeg,
    DelNeg,
    FlipSign,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 6] = [
        PerturbationKind::DropEdge,
        PerturbationKind::AddPos,
        PerturbationKind::DelPos,
        PerturbationKind::AddNeg,
        PerturbationKind::DelNeg,
        PerturbationKind::FlipSign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PerturbationKind::DropEdge => "drop-edge",
            PerturbationKind::AddPos => "add-pos",
            PerturbationKind::DelPos => "del-pos",
            PerturbationKind::AddNeg => "add-neg",
            PerturbationKind::DelNeg => "del-neg",
            PerturbationKind::FlipSign => "flip-sign",
        }
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PerturbationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown perturbation `{s}`")))
    }
}

/// Applies `kind` to `ceil(ratio * pool)` uniformly chosen items, where the
/// pool is all edges for drop and flip and the edges of the named sign for
/// the add/delete kinds. Additions draw absent node pairs from `0..num_nodes`.
pub fn random_perturbation(
    num_nodes: usize,
    train: &[EdgeSample],
    kind: PerturbationKind,
    ratio: f64,
    seed: u64,
) -> Result<Vec<EdgeSample>> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidArgument(format!("perturbation ratio must be in [0, 1], got {ratio}")));
    }
    let mut rng = rng_from_seed(seed);
    let pool_sign = match kind {
        PerturbationKind::AddPos | PerturbationKind::DelPos => Some(Sign::Positive),
        PerturbationKind::AddNeg | PerturbationKind::DelNeg => Some(Sign::Negative),
        _ => None,
    };
    let pool: Vec<usize> = (0..train.len())
        .filter(|&i| pool_sign.is_none_or(|s| train[i].sign == s))
        .collect();
    let k = ceil_fraction(ratio, pool.len());
    if k == 0 {
        return Ok(train.to_vec());
    }

    match kind {
        PerturbationKind::DropEdge | PerturbationKind::DelPos | PerturbationKind::DelNeg => {
            let chosen: HashSet<usize> = sample(&mut rng, pool.len(), k).into_iter().map(|i| pool[i]).collect();
            Ok(train
                .iter()
                .enumerate()
                .filter(|(i, _)| !chosen.contains(i))
                .map(|(_, e)| *e)
                .collect())
        }
        PerturbationKind::FlipSign => {
            let mut out = train.to_vec();
            for i in sample(&mut rng, pool.len(), k) {
                out[pool[i]].sign = out[pool[i]].sign.flipped();
            }
            Ok(out)
        }
        PerturbationKind::AddPos | PerturbationKind::AddNeg => {
            let sign = pool_sign.expect("add kinds carry a sign");
            let mut present: HashSet<(usize, usize)> = train.iter().map(|e| e.key()).collect();
            let capacity = (num_nodes * num_nodes.saturating_sub(1) / 2).saturating_sub(present.len());
            if k > capacity {
                return Err(Error::InvalidArgument(format!(
                    "cannot add {k} edges: only {capacity} absent pairs among {num_nodes} nodes"
                )));
            }
            let mut out = train.to_vec();
            while out.len() < train.len() + k {
                let u = rng.gen_range(0..num_nodes);
                let v = rng.gen_range(0..num_nodes);
                if u == v {
                    continue;
                }
                let e = EdgeSample { u: u.min(v), v: u.max(v), sign };
                if present.insert(e.key()) {
                    out.push(e);
                }
            }
            Ok(out)
        }
    }
}
