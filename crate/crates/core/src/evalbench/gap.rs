//! Empirical generalization gap of the downstream sign classifier next to
//! the stability bound
//! `2 a_lx + sqrt(2) a_ly M beta (theta + t eta a_lx a_f beta) / n_t`.

use serde::{Deserialize, Serialize};

use super::logistic::mean_log_loss;
use super::{fit_sign_classifier, pair_matrix};
use crate::encoder::EncoderState;
use crate::error::{Error, Result};
use crate::graph::EdgeSample;

/// User-supplied constants of the bound. The Lipschitz constants cannot be
/// estimated from data; the defaults only fix the shape of the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapConstants {
    pub alpha_lx: f64,
    pub alpha_ly: f64,
    pub alpha_f: f64,
    pub m: f64,
    /// Learning rate; `None` takes the encoder's.
    pub eta: Option<f64>,
    /// Optimizer steps; `None` takes the encoder's.
    pub t: Option<f64>,
}

impl Default for GapConstants {
    fn default() -> Self {
        GapConstants { alpha_lx: 1.0, alpha_ly: 1.0, alpha_f: 1.0, m: 1.0, eta: None, t: None }
    }
}

impl GapConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha_lx, self.alpha_ly, self.alpha_f, self.m, self.eta.unwrap_or(1.0), self.t.unwrap_or(1.0)];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("gap constants must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
pub fn theorem_bound(alpha_lx: f64, alpha_ly: f64, alpha_f: f64, m: f64, eta: f64, t: f64, beta: f64, theta: f64, n_t: f64) -> f64 {
    2.0 * alpha_lx + std::f64::consts::SQRT_2 * alpha_ly * m * beta * (theta + t * eta * alpha_lx * alpha_f * beta) / n_t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapDiagnostic {
    pub train_error: f64,
    pub test_error: f64,
    pub empirical_gap: f64,
    /// Largest absolute embedding entry.
    pub z_inf_norm: f64,
    pub weight_norm: f64,
    /// Weight norm at initialisation.
    pub init_weight_norm: f64,
    pub n_train_edges: usize,
    pub eta: f64,
    pub t: f64,
    pub bound_value: f64,
}

impl GapDiagnostic {
    /// Re-evaluates the bound at another training-set size.
    pub fn bound_at(&self, constants: &GapConstants, n_t: f64) -> f64 {
        theorem_bound(
            constants.alpha_lx,
            constants.alpha_ly,
            constants.alpha_f,
            constants.m,
            self.eta,
            self.t,
            self.z_inf_norm,
            self.init_weight_norm,
            n_t,
        )
    }
}

pub fn generalization_diagnostic(
    state: &EncoderState,
    train: &[EdgeSample],
    test: &[EdgeSample],
    constants: &GapConstants,
) -> Result<GapDiagnostic> {
    constants.validate()?;
    if test.is_empty() {
        return Err(Error::InvalidArgument("no test edges".into()));
    }
    let clf = fit_sign_classifier(state, train)?;
    let error = |edges: &[EdgeSample]| {
        let probs = clf.predict_proba(&pair_matrix(state, edges));
        let y: Vec<bool> = edges.iter().map(|e| e.sign.is_positive()).collect();
        mean_log_loss(&probs, &y)
    };
    let train_error = error(train);
    let test_error = error(test);
    let beta = state.embeddings.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eta = constants.eta.unwrap_or(state.config.learning_rate);
    let t = constants.t.unwrap_or(state.epochs_trained as f64);
    let mut diag = GapDiagnostic {
        train_error,
        test_error,
        empirical_gap: (train_error - test_error).abs(),
        z_inf_norm: beta,
        weight_norm: state.params.norm(),
        init_weight_norm: state.init_weight_norm,
        n_train_edges: train.len(),
        eta,
        t,
        bound_value: 0.0,
    };
    diag.bound_value = diag.bound_at(constants, train.len() as f64);
    Ok(diag)
}
