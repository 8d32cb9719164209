//! Candidate edge generation from classifier probabilities and the
//! balance-preserving selection of those candidates.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::enumerate_triangles;
use crate::encoder::{train_encoder, EdgeProbabilities, EncoderConfig, EncoderState};
use crate::error::{Error, Result};
use crate::graph::{EdgeSample, Sign, SignedGraph};

/// Above this node count the all-pairs scan is refused.
pub const ALL_PAIRS_MAX_NODES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateScope {
    /// Pairs sharing at least one neighbour, plus existing edges.
    TwoHop,
    AllPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub eps_add_pos: f64,
    pub eps_add_neg: f64,
    pub eps_del_pos: f64,
    pub eps_del_neg: f64,
    pub candidate_scope: CandidateScope,
    pub max_additions: Option<usize>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            eps_add_pos: 0.9,
            eps_add_neg: 0.9,
            eps_del_pos: 0.2,
            eps_del_neg: 0.2,
            candidate_scope: CandidateScope::TwoHop,
            max_additions: None,
        }
    }
}

impl AugmentConfig {
    /// Thresholds that can never fire: the augmented set equals the input.
    pub fn noop() -> Self {
        AugmentConfig {
            eps_add_pos: 1.0,
            eps_add_neg: 1.0,
            eps_del_pos: 0.0,
            eps_del_neg: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_add_pos", self.eps_add_pos),
            ("eps_add_neg", self.eps_add_neg),
            ("eps_del_pos", self.eps_del_pos),
            ("eps_del_neg", self.eps_del_neg),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("augment.{name} must be in [0, 1], got {v}")));
            }
        }
        for (name, v) in [("eps_add_pos", self.eps_add_pos), ("eps_add_neg", self.eps_add_neg)] {
            if v <= 0.5 {
                log::warn!("augment.{name} = {v} <= 0.5 admits low-confidence additions");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub edge: EdgeSample,
    pub confidence: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSets {
    /// Sorted by confidence descending, then by pair.
    pub additions: Vec<Candidate>,
    pub deletions: Vec<EdgeSample>,
}

/// Proposed sign for a pair, if either addition threshold is exceeded.
/// When both fire the more probable sign wins; ties go to positive.
pub fn addition_rule(p: &EdgeProbabilities, cfg: &AugmentConfig) -> Option<(Sign, f64)> {
    let pos = p.p_pos > cfg.eps_add_pos;
    let neg = p.p_neg > cfg.eps_add_neg;
    match (pos, neg) {
        (true, true) if p.p_neg > p.p_pos => Some((Sign::Negative, p.p_neg)),
        (true, _) => Some((Sign::Positive, p.p_pos)),
        (false, true) => Some((Sign::Negative, p.p_neg)),
        (false, false) => None,
    }
}

/// Whether an existing edge of `sign` should be deleted.
pub fn deletion_rule(sign: Sign, p: &EdgeProbabilities, cfg: &AugmentConfig) -> bool {
    match sign {
        Sign::Positive => p.p_pos < cfg.eps_del_pos,
        Sign::Negative => p.p_neg < cfg.eps_del_neg,
    }
}

/// Pairs `(i, j)`, `i < j`, with a common neighbour and no edge.
fn two_hop_non_edges(graph: &SignedGraph) -> Vec<(usize, usize)> {
    let n = graph.num_nodes();
    (0..n)
        .into_par_iter()
        .map_init(
            || vec![usize::MAX; n],
            |stamp, i| {
                let mut out = Vec::new();
                for &(k, _) in graph.neighbors(i) {
                    for &(j, _) in graph.neighbors(k) {
                        if j > i && stamp[j] != i {
                            stamp[j] = i;
                            if !graph.has_edge(i, j) {
                                out.push((i, j));
                            }
                        }
                    }
                }
                out.sort_unstable();
                out
            },
        )
        .flatten()
        .collect()
}

pub fn generate_candidates(
    graph: &SignedGraph,
    state: &EncoderState,
    train: &[EdgeSample],
    cfg: &AugmentConfig,
) -> Result<CandidateSets> {
    if !state.is_trained() {
        return Err(Error::Untrained);
    }
    if state.num_nodes() != graph.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "encoder covers {} nodes but graph has {}",
            state.num_nodes(),
            graph.num_nodes()
        )));
    }
    cfg.validate()?;
    let n = graph.num_nodes();
    let scorer = state.pair_scorer();

    let mut additions: Vec<Candidate> = match cfg.candidate_scope {
        CandidateScope::TwoHop => two_hop_non_edges(graph)
            .into_par_iter()
            .filter_map(|(u, v)| {
                addition_rule(&scorer.probs(u, v), cfg).map(|(sign, confidence)| Candidate {
                    edge: EdgeSample { u, v, sign },
                    confidence,
                })
            })
            .collect(),
        CandidateScope::AllPairs => {
            if n > ALL_PAIRS_MAX_NODES {
                return Err(Error::Config(format!(
                    "all-pairs candidate scope needs <= {ALL_PAIRS_MAX_NODES} nodes, graph has {n}"
                )));
            }
            (0..n)
                .into_par_iter()
                .flat_map_iter(|u| {
                    let scorer = &scorer;
                    (u + 1..n).filter(move |&v| !graph.has_edge(u, v)).filter_map(move |v| {
                        addition_rule(&scorer.probs(u, v), cfg).map(|(sign, confidence)| Candidate {
                            edge: EdgeSample { u, v, sign },
                            confidence,
                        })
                    })
                })
                .collect()
        }
    };

    let mut deletions = Vec::new();
    let mut seen = HashSet::new();
    for e in train {
        let key = e.key();
        if !seen.insert(key) {
            continue;
        }
        let p = scorer.probs(key.0, key.1);
        if deletion_rule(e.sign, &p, cfg) {
            deletions.push(e.canonical());
        }
        // only an opposite sign can be proposed for an existing pair
        if let Some((sign, confidence)) = addition_rule(&p, cfg) {
            if sign != e.sign {
                additions.push(Candidate {
                    edge: EdgeSample { u: key.0, v: key.1, sign },
                    confidence,
                });
            }
        }
    }

    additions.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| a.edge.cmp(&b.edge))
    });
    if let Some(cap) = cfg.max_additions {
        additions.truncate(cap);
    }
    Ok(CandidateSets { additions, deletions })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub train: Vec<EdgeSample>,
    /// Accepted additions in acceptance order.
    pub accepted: Vec<EdgeSample>,
    pub deleted: Vec<EdgeSample>,
    /// Additions that would have closed an unbalanced triangle.
    pub rejected: usize,
    /// Additions whose pair was already present.
    pub skipped_existing: usize,
}

/// Applies all deletions, then tries additions in the given order against
/// the evolving graph: an addition is kept only if every triangle it closes
/// is balanced.
pub fn select_beneficial(train: &[EdgeSample], candidates: &CandidateSets) -> SelectionOutcome {
    let delete: HashSet<EdgeSample> = candidates.deletions.iter().map(|e| e.canonical()).collect();
    let mut out = SelectionOutcome::default();
    let mut kept = Vec::with_capacity(train.len() + candidates.additions.len());
    for e in train {
        if delete.contains(&e.canonical()) {
            out.deleted.push(*e);
        } else {
            kept.push(*e);
        }
    }

    let n = kept
        .iter()
        .chain(candidates.additions.iter().map(|c| &c.edge))
        .map(|e| e.u.max(e.v) + 1)
        .max()
        .unwrap_or(0);
    let mut adj: Vec<BTreeMap<usize, Sign>> = vec![BTreeMap::new(); n];
    for e in &kept {
        adj[e.u].insert(e.v, e.sign);
        adj[e.v].insert(e.u, e.sign);
    }

    for cand in &candidates.additions {
        let EdgeSample { u, v, sign } = cand.edge;
        if u == v || adj[u].contains_key(&v) {
            out.skipped_existing += 1;
            continue;
        }
        let (small, large) = if adj[u].len() <= adj[v].len() { (u, v) } else { (v, u) };
        let balanced = adj[small].iter().all(|(k, s_small)| match adj[large].get(k) {
            Some(s_large) => sign.product(*s_small).product(*s_large).is_positive(),
            None => true,
        });
        if !balanced {
            out.rejected += 1;
            continue;
        }
        adj[u].insert(v, sign);
        adj[v].insert(u, sign);
        out.accepted.push(cand.edge);
        kept.push(cand.edge);
    }
    out.train = kept;
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentationLog {
    pub added_pos: usize,
    pub added_neg: usize,
    pub deleted_pos: usize,
    pub deleted_neg: usize,
    pub rejected: usize,
    pub skipped_existing: usize,
    pub candidate_additions: usize,
    pub candidate_deletions: usize,
    pub bt_before: u64,
    pub ut_before: u64,
    pub bt_after: u64,
    pub ut_after: u64,
    pub bd_before: Option<f64>,
    pub bd_after: Option<f64>,
    pub density_before: f64,
    pub density_after: f64,
}

#[derive(Debug, Clone)]
pub struct AugmentOutcome {
    pub train: Vec<EdgeSample>,
    pub graph: SignedGraph,
    pub log: AugmentationLog,
    pub candidates: CandidateSets,
}

/// Candidate generation and selection with an already trained encoder.
pub fn augment_with_encoder(
    graph: &SignedGraph,
    train: &[EdgeSample],
    encoder: &EncoderState,
    aug_cfg: &AugmentConfig,
) -> Result<AugmentOutcome> {
    let candidates = generate_candidates(graph, encoder, train, aug_cfg)?;
    let selection = select_beneficial(train, &candidates);
    let augmented = SignedGraph::from_edges(graph.num_nodes(), &selection.train)?;

    let before = enumerate_triangles(graph);
    let after = enumerate_triangles(&augmented);
    let count = |edges: &[EdgeSample], s: Sign| edges.iter().filter(|e| e.sign == s).count();
    let log = AugmentationLog {
        added_pos: count(&selection.accepted, Sign::Positive),
        added_neg: count(&selection.accepted, Sign::Negative),
        deleted_pos: count(&selection.deleted, Sign::Positive),
        deleted_neg: count(&selection.deleted, Sign::Negative),
        rejected: selection.rejected,
        skipped_existing: selection.skipped_existing,
        candidate_additions: candidates.additions.len(),
        candidate_deletions: candidates.deletions.len(),
        bt_before: before.balanced,
        ut_before: before.unbalanced,
        bt_after: after.balanced,
        ut_after: after.unbalanced,
        bd_before: before.global_balance_degree(),
        bd_after: after.global_balance_degree(),
        density_before: graph.density()?,
        density_after: augmented.density()?,
    };
    Ok(AugmentOutcome {
        train: selection.train,
        graph: augmented,
        log,
        candidates,
    })
}

/// Pre-trains an encoder on `train` and augments it.
pub fn augment(
    graph: &SignedGraph,
    train: &[EdgeSample],
    enc_cfg: &EncoderConfig,
    aug_cfg: &AugmentConfig,
) -> Result<(AugmentOutcome, EncoderState)> {
    aug_cfg.validate()?;
    let encoder = train_encoder(graph, train, enc_cfg).map_err(|e| e.in_stage("pre-train"))?;
    let outcome = augment_with_encoder(graph, train, &encoder, aug_cfg)?;
    Ok((outcome, encoder))
}
