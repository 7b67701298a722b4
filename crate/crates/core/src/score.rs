//! Similarity-based resolver.
//!
//! Features describing the same underlying attribute are grouped and each
//! group contributes only its maximum. The group values are summed and
//! scaled onto a 10-point range, then compared against a threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_index, FeatureVector, FEATURE_NAMES, NUM_FEATURES};

pub const SCALE: f64 = 10.0;
pub const DEFAULT_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScoreConfig", into = "RawScoreConfig")]
pub struct ScoreConfig {
    groups: Vec<Vec<usize>>,
    threshold: f64,
}

#[derive(Serialize, Deserialize)]
struct RawScoreConfig {
    groups: Vec<Vec<String>>,
    threshold: f64,
}

impl TryFrom<RawScoreConfig> for ScoreConfig {
    type Error = Error;

    fn try_from(raw: RawScoreConfig) -> Result<Self> {
        let groups = raw
            .groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|name| {
                        feature_index(name).ok_or_else(|| {
                            Error::InvalidArgument(format!("unknown feature `{name}`"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        ScoreConfig::new(groups, raw.threshold)
    }
}

impl From<ScoreConfig> for RawScoreConfig {
    fn from(cfg: ScoreConfig) -> Self {
        RawScoreConfig {
            groups: cfg
                .groups
                .iter()
                .map(|g| g.iter().map(|&i| FEATURE_NAMES[i].to_string()).collect())
                .collect(),
            threshold: cfg.threshold,
        }
    }
}

impl Default for ScoreConfig {
    /// Name, category, channel evidence, title evidence, engagement.
    fn default() -> Self {
        ScoreConfig {
            groups: vec![vec![0, 1, 2], vec![3], vec![4, 5, 6, 7], vec![8, 9], vec![10, 11]],
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl ScoreConfig {
    /// `groups` holds feature indices and must partition `0..12`.
    pub fn new(groups: Vec<Vec<usize>>, threshold: f64) -> Result<Self> {
        let mut seen = [false; NUM_FEATURES];
        for &i in groups.iter().flatten() {
            if i >= NUM_FEATURES {
                return Err(Error::InvalidArgument(format!("feature index {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!(
                    "feature `{}` appears in more than one group",
                    FEATURE_NAMES[i]
                )));
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "feature `{}` is not in any group",
                FEATURE_NAMES[i]
            )));
        }
        if groups.iter().any(Vec::is_empty) {
            return Err(Error::InvalidArgument("empty feature group".into()));
        }
        if !(0.0..=SCALE).contains(&threshold) {
            return Err(Error::InvalidArgument(format!(
                "score threshold {threshold} outside [0, 10]"
            )));
        }
        Ok(ScoreConfig { groups, threshold })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        self.threshold = threshold;
        Self::new(self.groups, self.threshold)
    }
}

pub fn group_values(fv: &FeatureVector, cfg: &ScoreConfig) -> Vec<f64> {
    let v = fv.to_array();
    cfg.groups
        .iter()
        .map(|g| g.iter().map(|&i| v[i]).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

pub fn score(fv: &FeatureVector, cfg: &ScoreConfig) -> f64 {
    let sum: f64 = group_values(fv, cfg).iter().sum();
    sum * (SCALE / cfg.groups.len() as f64)
}

pub fn decide(score_value: f64, cfg: &ScoreConfig) -> bool {
    score_value >= cfg.threshold
}
