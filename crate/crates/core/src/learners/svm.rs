use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, CostMatrix, Dataset, LearnerSpec, Model, ModelKind, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 0.01,
            epochs: 100,
            seed: 0,
        }
    }
}

/// Maps a margin onto `[0, 1]` by `(m + 1) / 2`, clipped. Not a
/// calibrated probability.
pub fn margin_confidence(margin: f64) -> f64 {
    ((margin + 1.0) / 2.0).clamp(0.0, 1.0)
}

/// `(lambda/2)|w|^2 + (1/n) sum_i c_i max(0, 1 - y_i (w.x_i + b))` with
/// `y_i` in {-1, +1}.
pub fn objective(x: &[Vec<f64>], y: &[bool], row_weights: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let n = x.len() as f64;
    let hinge: f64 = x
        .iter()
        .zip(y)
        .zip(row_weights)
        .map(|((xi, &yi), ci)| {
            let s = if yi { 1.0 } else { -1.0 };
            ci * (1.0 - s * (dot(w, xi) + b)).max(0.0)
        })
        .sum();
    0.5 * lambda * dot(w, w) + hinge / n
}

pub fn train_linear_svm(data: &Dataset, cm: &CostMatrix, hp: &SvmParams) -> Result<Model> {
    train_linear_svm_traced(data, cm, hp).map(|(model, _)| model)
}

/// Stochastic subgradient descent with step `1/(lambda t)`, one pass over
/// a seeded shuffle per epoch.
///
/// The returned trace holds the objective at the zero start and after each
/// epoch. The model keeps the epoch checkpoint with the lowest objective.
pub fn train_linear_svm_traced(
    data: &Dataset,
    cm: &CostMatrix,
    hp: &SvmParams,
) -> Result<(Model, Vec<f64>)> {
    data.require_trainable(true)?;
    cm.validate()?;
    if !(hp.lambda > 0.0 && hp.lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {}", hp.lambda)));
    }
    let std = Standardizer::fit(data);
    let x = std.transform_all(data);
    let y = data.labels();
    let c: Vec<f64> = y.iter().map(|&l| cm.weight(l)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut w = vec![0.0; data.arity()];
    let mut b = 0.0;
    let mut t = 0usize;

    let start = objective(&x, y, &c, &w, b, hp.lambda);
    let mut trace = vec![start];
    let mut best = (start, w.clone(), b);

    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (hp.lambda * t as f64);
            let s = if y[i] { 1.0 } else { -1.0 };
            let violated = s * (dot(&w, &x[i]) + b) < 1.0;
            let shrink = 1.0 - eta * hp.lambda;
            w.iter_mut().for_each(|wj| *wj *= shrink);
            if violated {
                let step = eta * c[i] * s;
                for (wj, v) in w.iter_mut().zip(&x[i]) {
                    *wj += step * v;
                }
                b += step;
            }
        }
        let obj = objective(&x, y, &c, &w, b, hp.lambda);
        trace.push(obj);
        if obj < best.0 {
            best = (obj, w.clone(), b);
        }
    }

    let (_, w, b) = best;
    let model = Model {
        kind: ModelKind::LinearSvm,
        arity: data.arity(),
        threshold: 0.5,
        seed: hp.seed,
        hyperparameters: LearnerSpec::LinearSvm(hp.clone()),
        standardization: Some(std),
        weights: w,
        bias: b,
        trees: Vec::new(),
    };
    Ok((model, trace))
}
