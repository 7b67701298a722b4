//! Stratified cross-validation, cost-based threshold selection and
//! precision/recall/F-measure reporting.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::epg::ShowKey;
use crate::error::{Error, Result};
use crate::learners::{Dataset, LearnerSpec};
use crate::score::{self, ScoreConfig, SCALE};

pub use crate::learners::CostMatrix;

/// Selection mode: strict top-1 per show, or every related page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    MostSuitable,
    AnythingSuitable,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::MostSuitable, Mode::AnythingSuitable];

    pub fn name(self) -> &'static str {
        match self {
            Mode::MostSuitable => "most_suitable",
            Mode::AnythingSuitable => "anything_suitable",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "most_suitable" => Ok(Mode::MostSuitable),
            "anything_suitable" => Ok(Mode::AnythingSuitable),
            _ => Err(Error::InvalidArgument(format!("unknown mode `{s}`"))),
        }
    }
}

/// Manual label of a show/page pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldLabel {
    Unrelated,
    Related,
    Best,
}

impl GoldLabel {
    /// Pairwise target: suitable at all.
    pub fn is_positive(self) -> bool {
        !matches!(self, GoldLabel::Unrelated)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold id of each row.
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Shuffles each class with the seed and deals it round-robin to folds.
/// The deal continues across classes, so fold sizes also stay balanced.
pub fn stratified_kfold(labels: &[bool], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; labels.len()];
    let mut next = 0;
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() * 2 < k {
            return Err(Error::TooFewExamples(format!(
                "{} {} examples for {k} folds",
                members.len(),
                if class { "positive" } else { "negative" }
            )));
        }
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan { k, seed, assignments })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn cost(&self, cm: &CostMatrix) -> f64 {
        cm.c_fp * self.fp as f64 + cm.c_fn * self.fn_ as f64
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

pub fn confusion(predictions: &[bool], labels: &[bool]) -> Confusion {
    let mut c = Confusion::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        c.add(p, l);
    }
    c
}

/// Precision, recall and F1. An empty denominator counts as 1.0; F1 is 0
/// when both precision and recall are 0.
pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// Threshold that minimizes misclassification cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub cost: f64,
}

/// Candidate cuts: 0, 1, and the midpoints between consecutive distinct
/// confidences. A row is predicted positive when its confidence is at or
/// above the cut.
pub fn candidate_thresholds(confidences: &[f64]) -> Vec<f64> {
    let mut sorted = confidences.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut cuts = vec![0.0, 1.0];
    cuts.extend(sorted.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// Scans the candidate cuts, keeping the cheapest; ties go to the larger
/// threshold so fewer pages get recommended.
pub fn select_threshold(confidences: &[f64], labels: &[bool], cm: &CostMatrix) -> Result<ThresholdChoice> {
    if confidences.is_empty() {
        return Err(Error::EmptyInput("no confidences to select a threshold from"));
    }
    if confidences.len() != labels.len() {
        return Err(Error::InvalidArgument("confidences and labels differ in length".into()));
    }
    // sweep cuts in descending order; rows enter the positive set as the
    // cut drops to their confidence
    let mut rows: Vec<(f64, bool)> = confidences.iter().copied().zip(labels.iter().copied()).collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total_pos = labels.iter().filter(|&&l| l).count();

    let mut best: Option<ThresholdChoice> = None;
    let (mut tp, mut fp, mut next) = (0usize, 0usize, 0usize);
    for cut in candidate_thresholds(confidences).into_iter().rev() {
        while next < rows.len() && rows[next].0 >= cut {
            if rows[next].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            next += 1;
        }
        let cost = cm.c_fp * fp as f64 + cm.c_fn * (total_pos - tp) as f64;
        if best.is_none_or(|b| cost < b.cost) {
            best = Some(ThresholdChoice { threshold: cut, cost });
        }
    }
    Ok(best.expect("at least two candidate cuts"))
}

/// How a method produces confidences and decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Resolver {
    /// Fixed manual threshold; confidence is the score divided by 10.
    ScoreModel(ScoreConfig),
    Learner(LearnerSpec),
}

impl Resolver {
    pub fn name(&self) -> &'static str {
        match self {
            Resolver::ScoreModel(_) => "score_model",
            Resolver::Learner(spec) => spec.kind().name(),
        }
    }
}

/// Out-of-fold results of cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub confusion: Confusion,
    pub fold_thresholds: Vec<f64>,
    /// Held-out confidence of each row.
    pub confidences: Vec<f64>,
    /// Held-out decision of each row.
    pub decisions: Vec<bool>,
}

impl CvOutcome {
    pub fn mean_threshold(&self) -> f64 {
        if self.fold_thresholds.is_empty() {
            return 0.0;
        }
        self.fold_thresholds.iter().sum::<f64>() / self.fold_thresholds.len() as f64
    }
}

/// Trains on k-1 folds, picks the threshold on the training folds'
/// confidences, and predicts the held-out fold. Confusion counts are
/// pooled over folds.
pub fn cross_validate(
    method: &Resolver,
    data: &Dataset,
    k: usize,
    cm: &CostMatrix,
    seed: u64,
) -> Result<CvOutcome> {
    let plan = stratified_kfold(data.labels(), k, seed)?;
    let mut confidences = vec![0.0; data.len()];
    let mut decisions = vec![false; data.len()];
    let mut fold_thresholds = Vec::with_capacity(k);

    for fold in 0..k {
        let test = plan.test_rows(fold);
        if test.is_empty() {
            continue;
        }
        match method {
            Resolver::ScoreModel(cfg) => {
                for &i in &test {
                    let s = score_row(&data.rows()[i], cfg)?;
                    confidences[i] = s / SCALE;
                    decisions[i] = score::decide(s, cfg);
                }
                fold_thresholds.push(cfg.threshold() / SCALE);
            }
            Resolver::Learner(spec) => {
                let train = data.subset(&plan.train_rows(fold));
                let mut model = spec.train(&train, cm)?;
                let train_conf = train
                    .rows()
                    .iter()
                    .map(|r| model.predict_proba(r))
                    .collect::<Result<Vec<_>>>()?;
                model.threshold = select_threshold(&train_conf, train.labels(), cm)?.threshold;
                for &i in &test {
                    let c = model.predict_proba(&data.rows()[i])?;
                    confidences[i] = c;
                    decisions[i] = c >= model.threshold;
                }
                fold_thresholds.push(model.threshold);
            }
        }
    }

    Ok(CvOutcome {
        confusion: confusion(&decisions, data.labels()),
        fold_thresholds,
        confidences,
        decisions,
    })
}

fn score_row(row: &[f64], cfg: &ScoreConfig) -> Result<f64> {
    let arr: [f64; crate::features::NUM_FEATURES] = row
        .try_into()
        .map_err(|_| Error::KindMismatch { expected: crate::features::NUM_FEATURES, got: row.len() })?;
    Ok(score::score(&crate::features::FeatureVector::from_array(arr), cfg))
}

/// A show's candidates with resolver decisions and the pages selected
/// for it under some mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShowOutcome {
    pub show_key: ShowKey,
    pub candidates: Vec<(String, bool)>,
    pub selected: Vec<String>,
}

/// Scores selections against gold labels.
///
/// `anything_suitable` counts every candidate pair: a pair is positive when
/// labeled related or best, predicted positive when selected.
/// `most_suitable` counts shows: selecting the best page is a TP, selecting
/// any other page an FP, selecting nothing when a best exists an FN, and
/// selecting nothing otherwise a TN. Unlabeled pairs count as unrelated.
pub fn evaluate_modes(
    outcomes: &[ShowOutcome],
    gold: &BTreeMap<(ShowKey, String), GoldLabel>,
    mode: Mode,
) -> Confusion {
    let label = |show: &ShowKey, page: &str| {
        gold.get(&(show.clone(), page.to_string()))
            .copied()
            .unwrap_or(GoldLabel::Unrelated)
    };
    let mut c = Confusion::default();
    for o in outcomes {
        match mode {
            Mode::AnythingSuitable => {
                for (page, _) in &o.candidates {
                    c.add(o.selected.contains(page), label(&o.show_key, page).is_positive());
                }
            }
            Mode::MostSuitable => match o.selected.first() {
                Some(page) => c.add(true, label(&o.show_key, page) == GoldLabel::Best),
                None => {
                    let has_best = gold
                        .range((o.show_key.clone(), String::new())..)
                        .take_while(|((s, _), _)| s == &o.show_key)
                        .any(|(_, &l)| l == GoldLabel::Best);
                    c.add(false, has_best);
                }
            },
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub mode: Mode,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub chosen_threshold: f64,
}

impl MethodReport {
    pub fn new(method: &str, mode: Mode, c: Confusion, chosen_threshold: f64) -> Self {
        let (precision, recall, f1) = prf(c.tp, c.fp, c.fn_);
        MethodReport {
            method: method.to_string(),
            mode,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            tn: c.tn,
            precision,
            recall,
            f1,
            chosen_threshold,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub entries: Vec<MethodReport>,
}

impl EvalReport {
    pub fn get(&self, method: &str, mode: Mode) -> Option<&MethodReport> {
        self.entries.iter().find(|e| e.method == method && e.mode == mode)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        writeln!(
            out,
            "{:<15} {:<18} {:>5} {:>5} {:>5} {:>5} {:>9} {:>9} {:>9} {:>9}",
            "method", "mode", "tp", "fp", "fn", "tn", "precision", "recall", "f1", "threshold"
        )?;
        for e in &self.entries {
            writeln!(
                out,
                "{:<15} {:<18} {:>5} {:>5} {:>5} {:>5} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
                e.method,
                e.mode.name(),
                e.tp,
                e.fp,
                e.fn_,
                e.tn,
                e.precision,
                e.recall,
                e.f1,
                e.chosen_threshold
            )?;
        }
        f.write_str(&out)
    }
}
