use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Sign;

/// Area under the ROC curve via the Mann-Whitney rank statistic, ties
/// counting one half. `None` when either class is absent.
///
/// Ranks are kept doubled so the statistic is an exact integer ratio.
pub fn auc(scores: &[f64], labels: &[Sign]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let npos = labels.iter().filter(|s| s.is_positive()).count() as u128;
    let nneg = labels.len() as u128 - npos;
    if npos == 0 || nneg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // sum over positives of 2 * (average 1-based rank)
    let mut doubled_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let doubled = (i + 1 + j) as u128;
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k].is_positive()).count() as u128;
        doubled_rank_sum += doubled * pos_in_group;
        i = j;
    }
    let two_u = doubled_rank_sum - npos * (npos + 1);
    Some(two_u as f64 / (2 * npos * nneg) as f64)
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Metrics for one evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignMetrics {
    pub auc: Option<f64>,
    pub f1_binary: f64,
    pub f1_micro: f64,
    pub f1_macro: f64,
}

/// AUC on the scores and F1 variants on `score >= 0.5` predictions, with
/// the positive sign as the positive class.
pub fn compute_metrics(scores: &[f64], labels: &[Sign]) -> Result<SignMetrics> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scores to evaluate".into()));
    }
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&s, l) in scores.iter().zip(labels) {
        match (s >= 0.5, l.is_positive()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let f1_pos = f1(tp, fp, fn_);
    let f1_neg = f1(tn, fn_, fp);
    Ok(SignMetrics {
        auc: auc(scores, labels),
        f1_binary: f1_pos,
        f1_micro: (tp + tn) as f64 / scores.len() as f64,
        f1_macro: 0.5 * (f1_pos + f1_neg),
    })
}

/// Per-seed values of one metric with population mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricSummary {
    pub fn from_values(values: Vec<f64>) -> MetricSummary {
        if values.is_empty() {
            return MetricSummary { values, mean: f64::NAN, std: f64::NAN, min: f64::NAN, max: f64::NAN };
        }
        let n = values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // rounding can push the mean of identical values past them
        let mean = (values.iter().sum::<f64>() / n).clamp(min, max);
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MetricSummary {
            mean,
            std: var.sqrt(),
            min,
            max,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Seeds with an undefined AUC are left out of this summary.
    pub auc: MetricSummary,
    pub f1_binary: MetricSummary,
    pub f1_micro: MetricSummary,
    pub f1_macro: MetricSummary,
}

impl MetricsReport {
    pub fn aggregate(runs: &[SignMetrics]) -> MetricsReport {
        MetricsReport {
            auc: MetricSummary::from_values(runs.iter().filter_map(|m| m.auc).collect()),
            f1_binary: MetricSummary::from_values(runs.iter().map(|m| m.f1_binary).collect()),
            f1_micro: MetricSummary::from_values(runs.iter().map(|m| m.f1_micro).collect()),
            f1_macro: MetricSummary::from_values(runs.iter().map(|m| m.f1_macro).collect()),
        }
    }
}
