//! Learner-based resolvers over feature vectors.
//!
//! Three model families are provided, all trained from scratch and fully
//! deterministic given their hyperparameters and seed:
//!
//! - [`logistic`]: cost-weighted logistic regression, full-batch gradient descent.
//! - [`svm`]: cost-weighted linear hinge-loss model, stochastic subgradient descent.
//! - [`forest`]: random forest of Gini trees grown on bootstrap samples.
//!
//! The cost matrix enters the linear models as per-class loss weights. The
//! forest ignores it during training; costs reach it only through
//! threshold selection.

pub mod forest;
pub mod logistic;
pub mod svm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub use forest::{ForestParams, Node, Tree};
pub use logistic::LogisticParams;
pub use svm::SvmParams;

/// Misclassification costs. Correct decisions cost nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    /// Cost of a false positive (recommending an unrelated page).
    pub c_fp: f64,
    pub c_fn: f64,
}

impl Default for CostMatrix {
    fn default() -> Self {
        CostMatrix { c_fp: 1.2, c_fn: 1.0 }
    }
}

impl CostMatrix {
    pub fn new(c_fp: f64, c_fn: f64) -> Result<Self> {
        let cm = CostMatrix { c_fp, c_fn };
        cm.validate()?;
        Ok(cm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_fp > 0.0 && self.c_fn > 0.0 && self.c_fp.is_finite() && self.c_fn.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "costs must be positive and finite, got c_fp={} c_fn={}",
                self.c_fp, self.c_fn
            )))
        }
    }

    /// Loss weight of a training row with the given label.
    pub fn weight(&self, label: bool) -> f64 {
        if label {
            self.c_fn
        } else {
            self.c_fp
        }
    }
}

/// Labeled rows of fixed arity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    rows: Vec<Vec<f64>>,
    labels: Vec<bool>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(first) = rows.first() {
            let arity = first.len();
            if let Some(bad) = rows.iter().find(|r| r.len() != arity) {
                return Err(Error::KindMismatch { expected: arity, got: bad.len() });
            }
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
        Ok(Dataset { rows, labels })
    }

    pub fn from_vectors<'a, I>(rows: I) -> Self
    where
        I: IntoIterator<Item = (&'a FeatureVector, bool)>,
    {
        let (rows, labels) = rows
            .into_iter()
            .map(|(fv, label)| (fv.to_array().to_vec(), label))
            .unzip();
        Dataset { rows, labels }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub(crate) fn require_trainable(&self, need_both_classes: bool) -> Result<()> {
        if self.is_empty() {
            return Err(Error::DegenerateData("no training rows".into()));
        }
        if need_both_classes {
            let positives = self.labels.iter().filter(|&&l| l).count();
            if positives == 0 || positives == self.len() {
                return Err(Error::DegenerateData("training data has a single class".into()));
            }
        }
        Ok(())
    }
}

/// Per-feature zero-mean, unit-variance scaling. Constant features get a
/// scale of 0 and always map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &Dataset) -> Self {
        let n = data.len() as f64;
        let arity = data.arity();
        let mut mean = vec![0.0; arity];
        for row in data.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; arity];
        for row in data.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    0.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| if *s == 0.0 { 0.0 } else { (v - m) / s })
            .collect()
    }

    pub fn transform_all(&self, data: &Dataset) -> Vec<Vec<f64>> {
        data.rows().iter().map(|r| self.transform(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    LinearSvm,
    RandomForest,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::LinearSvm => "linear_svm",
            ModelKind::RandomForest => "random_forest",
        }
    }
}

/// Which learner to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    Logistic(LogisticParams),
    LinearSvm(SvmParams),
    RandomForest(ForestParams),
}

impl LearnerSpec {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Logistic => LearnerSpec::Logistic(LogisticParams::default()),
            ModelKind::LinearSvm => LearnerSpec::LinearSvm(SvmParams::default()),
            ModelKind::RandomForest => LearnerSpec::RandomForest(ForestParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            LearnerSpec::Logistic(_) => ModelKind::Logistic,
            LearnerSpec::LinearSvm(_) => ModelKind::LinearSvm,
            LearnerSpec::RandomForest(_) => ModelKind::RandomForest,
        }
    }

    /// Overrides the seed of the seeded learners.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            LearnerSpec::LinearSvm(p) => LearnerSpec::LinearSvm(SvmParams { seed, ..p }),
            LearnerSpec::RandomForest(p) => LearnerSpec::RandomForest(ForestParams { seed, ..p }),
            other => other,
        }
    }

    pub fn train(&self, data: &Dataset, cm: &CostMatrix) -> Result<Model> {
        match self {
            LearnerSpec::Logistic(hp) => logistic::train_logistic(data, cm, hp),
            LearnerSpec::LinearSvm(hp) => svm::train_linear_svm(data, cm, hp),
            LearnerSpec::RandomForest(hp) => forest::train_random_forest(data, hp),
        }
    }
}

/// A trained resolver with its decision threshold.
///
/// Linear kinds fill `standardization`, `weights` and `bias`; the forest
/// fills `trees`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub arity: usize,
    pub threshold: f64,
    pub seed: u64,
    pub hyperparameters: LearnerSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Standardizer>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
    #[serde(default)]
    pub bias: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trees: Vec<Tree>,
}

impl Model {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Model =
            serde_json::from_str(text).map_err(|e| Error::malformed("model file", e))?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::malformed("model file", msg));
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad("threshold outside [0, 1]");
        }
        if self.kind != self.hyperparameters.kind() {
            return bad("kind does not match hyperparameters");
        }
        match self.kind {
            ModelKind::RandomForest if self.trees.is_empty() => bad("forest has no trees"),
            ModelKind::Logistic | ModelKind::LinearSvm => {
                let Some(std) = &self.standardization else {
                    return bad("linear model without standardization");
                };
                if self.weights.len() != self.arity
                    || std.mean.len() != self.arity
                    || std.scale.len() != self.arity
                {
                    return bad("parameter length differs from arity");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Raw linear score `w . z + b` on standardized input.
    fn margin(&self, x: &[f64]) -> f64 {
        let z = match &self.standardization {
            Some(std) => std.transform(x),
            None => x.to_vec(),
        };
        dot(&self.weights, &z) + self.bias
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arity {
            return Err(Error::KindMismatch { expected: self.arity, got: x.len() });
        }
        Ok(match self.kind {
            ModelKind::Logistic => sigmoid(self.margin(x)),
            ModelKind::LinearSvm => svm::margin_confidence(self.margin(x)),
            ModelKind::RandomForest => {
                self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
            }
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<bool> {
        Ok(self.predict_proba(x)? >= self.threshold)
    }

    pub fn predict_proba_fv(&self, fv: &FeatureVector) -> Result<f64> {
        self.predict_proba(&fv.to_array())
    }

    pub fn predict_fv(&self, fv: &FeatureVector) -> Result<bool> {
        self.predict(&fv.to_array())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
