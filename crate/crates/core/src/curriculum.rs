//! Difficulty-ordered training: edges are sorted by how strongly balance
//! theory contradicts them, and a linear pacing function exposes a growing
//! prefix of that order to the optimizer.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{incident_triangles, EdgeBalanceProfile};
use crate::encoder::{EncoderConfig, EncoderState, Trainer};
use crate::error::{Error, Result};
use crate::graph::{ceil_fraction, EdgeSample, SignedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacingConfig {
    pub lambda0: f64,
    pub big_t: usize,
    pub total_epochs: usize,
}

impl PacingConfig {
    pub const DEFAULT_LAMBDA0: f64 = 0.25;

    /// `lambda0 = 0.25`, `T = total_epochs / 2`.
    pub fn with_defaults(total_epochs: usize) -> Self {
        PacingConfig {
            lambda0: Self::DEFAULT_LAMBDA0,
            big_t: (total_epochs / 2).max(1),
            total_epochs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0 && self.lambda0 <= 1.0) {
            return Err(Error::Config(format!("lambda0 must be in (0, 1], got {}", self.lambda0)));
        }
        if self.big_t < 1 || self.big_t > self.total_epochs {
            return Err(Error::Config(format!(
                "big_t must be in [1, {}], got {}",
                self.total_epochs, self.big_t
            )));
        }
        Ok(())
    }
}

/// `g(t) = min(1, lambda0 + (1 - lambda0) t / T)`.
pub fn pacing(t: usize, cfg: &PacingConfig) -> f64 {
    let frac = t as f64 / cfg.big_t as f64;
    (cfg.lambda0 + (1.0 - cfg.lambda0) * frac).min(1.0)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    pub ordered_edges: Vec<EdgeSample>,
    pub difficulties: Vec<f64>,
}

impl CurriculumSchedule {
    pub fn len(&self) -> usize {
        self.ordered_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered_edges.is_empty()
    }
}

/// Scores every training edge on `graph` and sorts by
/// `(difficulty, u, v)`. Edges absent from the graph score as
/// triangle-free.
pub fn score_and_sort(graph: &SignedGraph, train: &[EdgeSample]) -> CurriculumSchedule {
    let mut scored: Vec<(f64, EdgeSample)> = train
        .par_iter()
        .map(|e| {
            let (b, ub) = incident_triangles(graph, e.u, e.v, e.sign);
            (EdgeBalanceProfile::from_counts(*e, b, ub).difficulty, *e)
        })
        .collect();
    scored.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| (a.1.u, a.1.v).cmp(&(b.1.u, b.1.v)))
    });
    let (difficulties, ordered_edges) = scored.into_iter().unzip();
    CurriculumSchedule { ordered_edges, difficulties }
}

/// The first `ceil(g(t) N)` edges of the schedule, at least one.
pub fn subset_at_epoch<'a>(schedule: &'a CurriculumSchedule, t: usize, cfg: &PacingConfig) -> &'a [EdgeSample] {
    let n = schedule.len();
    let k = ceil_fraction(pacing(t, cfg), n).max(1).min(n);
    &schedule.ordered_edges[..k]
}

/// Trains a fresh encoder on `graph` with the paced subsets of `schedule`.
/// The number of sampled no-edge pairs follows the subset size.
pub fn train_with_curriculum(
    graph: &SignedGraph,
    schedule: &CurriculumSchedule,
    enc_cfg: &EncoderConfig,
    pace: &PacingConfig,
) -> Result<EncoderState> {
    pace.validate()?;
    if pace.total_epochs != enc_cfg.epochs {
        return Err(Error::Config(format!(
            "pacing total_epochs ({}) differs from encoder epochs ({})",
            pace.total_epochs, enc_cfg.epochs
        )));
    }
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty schedule".into()));
    }
    let mut trainer = Trainer::new(graph, enc_cfg)?;
    for t in 0..pace.total_epochs {
        trainer.epoch(subset_at_epoch(schedule, t, pace))?;
    }
    trainer.finish()
}

pub fn write_schedule_csv<W: Write>(schedule: &CurriculumSchedule, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "u", "v", "sign", "difficulty"])?;
    for (rank, (e, d)) in schedule.ordered_edges.iter().zip(&schedule.difficulties).enumerate() {
        w.write_record([
            rank.to_string(),
            e.u.to_string(),
            e.v.to_string(),
            e.sign.value().to_string(),
            d.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))
}
