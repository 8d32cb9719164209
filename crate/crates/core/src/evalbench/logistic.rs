//! L2-regularised binary logistic regression fitted by damped Newton steps.
//!
//! Objective: `0.5 |w|^2 + C sum_i log(1 + exp(-y_i (w x_i + b)))` with an
//! unpenalised intercept `b`.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn objective(x: &Array2<f64>, y: &[bool], c: f64, w: &Array1<f64>, b: f64) -> f64 {
    let margins = x.dot(w) + b;
    let data: f64 = margins
        .iter()
        .zip(y)
        .map(|(&m, &yi)| softplus(if yi { -m } else { m }))
        .sum();
    0.5 * w.dot(w) + c * data
}

impl LogisticRegression {
    pub const MAX_ITER: usize = 100;

    pub fn fit(x: &Array2<f64>, y: &[bool], c: f64) -> Result<LogisticRegression> {
        let (n, p) = x.dim();
        if n == 0 || n != y.len() {
            return Err(Error::InvalidArgument(format!("{n} feature rows for {} labels", y.len())));
        }
        if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
            return Err(Error::InvalidArgument("logistic fit needs both classes".into()));
        }
        if !(c > 0.0) {
            return Err(Error::InvalidArgument("regularisation constant must be > 0".into()));
        }
        let yf: Array1<f64> = y.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
        let mut w = Array1::<f64>::zeros(p);
        let mut b = 0.0;
        let mut obj = objective(x, y, c, &w, b);
        let mut iterations = 0;

        for _ in 0..Self::MAX_ITER {
            iterations += 1;
            let probs = (x.dot(&w) + b).mapv(sigmoid);
            let resid = &probs - &yf;
            let mut grad = DVector::zeros(p + 1);
            let gw = x.t().dot(&resid) * c + &w;
            for j in 0..p {
                grad[j] = gw[j];
            }
            grad[p] = c * resid.sum();

            let s = probs.mapv(|q| c * q * (1.0 - q));
            let xs = x * &s.view().insert_axis(Axis(1));
            let xtsx = x.t().dot(&xs);
            let xts = xs.sum_axis(Axis(0));
            let mut h = DMatrix::zeros(p + 1, p + 1);
            for i in 0..p {
                for j in 0..p {
                    h[(i, j)] = xtsx[[i, j]];
                }
                h[(i, i)] += 1.0;
                h[(i, p)] = xts[i];
                h[(p, i)] = xts[i];
            }
            h[(p, p)] = s.sum() + 1e-12;

            let step = match h.clone().cholesky() {
                Some(ch) => ch.solve(&grad),
                None => h
                    .lu()
                    .solve(&grad)
                    .ok_or_else(|| Error::InvalidArgument("singular Hessian in logistic fit".into()))?,
            };
            let decrement = grad.dot(&step);
            if decrement.abs() < 1e-18 {
                break;
            }

            let mut t = 1.0;
            let (mut w_new, mut b_new, mut obj_new);
            loop {
                w_new = &w - &(Array1::from_iter(step.iter().take(p).copied()) * t);
                b_new = b - t * step[p];
                obj_new = objective(x, y, c, &w_new, b_new);
                if obj_new <= obj - 0.25 * t * decrement || t < 1e-10 {
                    break;
                }
                t *= 0.5;
            }
            let improvement = obj - obj_new;
            w = w_new;
            b = b_new;
            obj = obj_new;
            if improvement.abs() <= 1e-12 * obj.abs().max(1.0) {
                break;
            }
        }
        if !w.iter().all(|v| v.is_finite()) || !b.is_finite() {
            return Err(Error::InvalidArgument("logistic fit produced non-finite weights".into()));
        }
        Ok(LogisticRegression { weights: w.to_vec(), intercept: b, iterations })
    }

    /// `P(y = 1 | x)` per row.
    pub fn predict_proba(&self, x: &Array2<f64>) -> Vec<f64> {
        let w = Array1::from(self.weights.clone());
        (x.dot(&w) + self.intercept).mapv(sigmoid).to_vec()
    }
}

/// Mean binary cross-entropy of probabilities against labels.
pub fn mean_log_loss(probs: &[f64], y: &[bool]) -> f64 {
    let eps = 1e-15;
    let total: f64 = probs
        .iter()
        .zip(y)
        .map(|(&p, &yi)| {
            let p = p.clamp(eps, 1.0 - eps);
            if yi {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / probs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Exhaustive grid search over `(w1, w2, b)`, refined around the best cell.
    fn grid_fit(x: &Array2<f64>, y: &[bool], c: f64) -> (f64, f64, f64) {
        let obj = |w1: f64, w2: f64, b: f64| {
            let mut total = 0.5 * (w1 * w1 + w2 * w2);
            for (row, &yi) in x.outer_iter().zip(y) {
                let m = w1 * row[0] + w2 * row[1] + b;
                let z: f64 = if yi { -m } else { m };
                total += c * (1.0 + z.exp()).ln();
            }
            total
        };
        let mut best = (0.0, 0.0, 0.0);
        let mut best_val = f64::INFINITY;
        let (mut lo, mut span, steps) = ([-4.0, -4.0, -4.0], 8.0, 80);
        for _ in 0..3 {
            let h = span / steps as f64;
            for i in 0..=steps {
                for j in 0..=steps {
                    for k in 0..=steps {
                        let (a, b2, c2) = (lo[0] + i as f64 * h, lo[1] + j as f64 * h, lo[2] + k as f64 * h);
                        let v = obj(a, b2, c2);
                        if v < best_val {
                            best_val = v;
                            best = (a, b2, c2);
                        }
                    }
                }
            }
            span = 4.0 * h;
            lo = [best.0 - 2.0 * h, best.1 - 2.0 * h, best.2 - 2.0 * h];
        }
        best
    }

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn matches_grid_search_on_eight_points() {
        let x = array![
            [1.0, 0.5],
            [0.8, -0.2],
            [1.5, 1.0],
            [-0.3, 0.4],
            [-1.0, -0.5],
            [-0.6, 0.9],
            [0.2, -1.2],
            [-1.4, 0.1]
        ];
        let y = [true, true, true, false, false, true, false, false];
        let fit = LogisticRegression::fit(&x, &y, 1.0).unwrap();
        let (w1, w2, b) = grid_fit(&x, &y, 1.0);
        let ours = fit.predict_proba(&x);
        for (row, p) in x.outer_iter().zip(ours) {
            let oracle = sig(w1 * row[0] + w2 * row[1] + b);
            assert!((p - oracle).abs() < 0.05, "{p} vs {oracle}");
        }
    }

    #[test]
    fn separable_points_classified() {
        let x = array![[2.0], [3.0], [1.5], [-2.0], [-1.0], [-3.0]];
        let y = [true, true, true, false, false, false];
        let fit = LogisticRegression::fit(&x, &y, 1.0).unwrap();
        for (p, yi) in fit.predict_proba(&x).iter().zip(y) {
            assert_eq!(*p >= 0.5, yi);
        }
        assert_eq!(fit, LogisticRegression::fit(&x, &y, 1.0).unwrap());
    }

    #[test]
    fn single_class_rejected() {
        let x = array![[1.0], [2.0]];
        assert!(LogisticRegression::fit(&x, &[true, true], 1.0).is_err());
    }

    #[test]
    fn log_loss_values() {
        assert!((mean_log_loss(&[0.5, 0.5], &[true, false]) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(mean_log_loss(&[1.0], &[false]).is_finite());
    }
}
