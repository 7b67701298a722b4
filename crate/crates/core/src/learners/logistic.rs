use serde::{Deserialize, Serialize};

use super::{dot, sigmoid, CostMatrix, Dataset, LearnerSpec, Model, ModelKind, Standardizer};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2: 0.01,
            lr: 0.1,
            epochs: 500,
        }
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Weighted, L2-regularized log-loss averaged over rows:
/// `(1/n) sum_i c_i [softplus(z_i) - y_i z_i] + (l2/2) |w|^2`, `z_i = w.x_i + b`.
pub fn objective(
    x: &[Vec<f64>],
    y: &[bool],
    row_weights: &[f64],
    w: &[f64],
    b: f64,
    l2: f64,
) -> f64 {
    let n = x.len() as f64;
    let data: f64 = x
        .iter()
        .zip(y)
        .zip(row_weights)
        .map(|((xi, &yi), ci)| {
            let z = dot(w, xi) + b;
            ci * (softplus(z) - if yi { z } else { 0.0 })
        })
        .sum();
    data / n + 0.5 * l2 * dot(w, w)
}

/// Gradient of [`objective`] with respect to `(w, b)`. The bias is not
/// regularized.
pub fn gradient(
    x: &[Vec<f64>],
    y: &[bool],
    row_weights: &[f64],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for ((xi, &yi), ci) in x.iter().zip(y).zip(row_weights) {
        let residual = ci * (sigmoid(dot(w, xi) + b) - if yi { 1.0 } else { 0.0 });
        for (g, v) in gw.iter_mut().zip(xi) {
            *g += residual * v;
        }
        gb += residual;
    }
    for (g, wj) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * wj;
    }
    (gw, gb / n)
}

pub fn train_logistic(data: &Dataset, cm: &CostMatrix, hp: &LogisticParams) -> Result<Model> {
    train_logistic_traced(data, cm, hp).map(|(model, _)| model)
}

/// Trains and also returns the objective after each epoch, starting with
/// the value at the zero initialization.
pub fn train_logistic_traced(
    data: &Dataset,
    cm: &CostMatrix,
    hp: &LogisticParams,
) -> Result<(Model, Vec<f64>)> {
    data.require_trainable(true)?;
    cm.validate()?;
    let std = Standardizer::fit(data);
    let x = std.transform_all(data);
    let y = data.labels();
    let c: Vec<f64> = y.iter().map(|&l| cm.weight(l)).collect();

    let mut w = vec![0.0; data.arity()];
    let mut b = 0.0;
    let mut trace = Vec::with_capacity(hp.epochs + 1);
    trace.push(objective(&x, y, &c, &w, b, hp.l2));
    for _ in 0..hp.epochs {
        let (gw, gb) = gradient(&x, y, &c, &w, b, hp.l2);
        for (wj, g) in w.iter_mut().zip(&gw) {
            *wj -= hp.lr * g;
        }
        b -= hp.lr * gb;
        trace.push(objective(&x, y, &c, &w, b, hp.l2));
    }
    // constant features carry no signal
    for (wj, s) in w.iter_mut().zip(&std.scale) {
        if *s == 0.0 {
            *wj = 0.0;
        }
    }

    let model = Model {
        kind: ModelKind::Logistic,
        arity: data.arity(),
        threshold: 0.5,
        seed: 0,
        hyperparameters: LearnerSpec::Logistic(hp.clone()),
        standardization: Some(std),
        weights: w,
        bias: b,
        trees: Vec::new(),
    };
    Ok((model, trace))
}
