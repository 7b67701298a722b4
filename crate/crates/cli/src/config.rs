use std::path::{Path, PathBuf};

use fanlink_core::evaluation::Mode;
use fanlink_core::learners::{CostMatrix, LearnerSpec, ModelKind};
use fanlink_core::pages::DEFAULT_K;
use fanlink_core::score::ScoreConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Which resolver `resolve` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolverChoice {
    ScoreModel,
    Learner,
}

/// Pipeline configuration, read from one JSON document. Relative paths are
/// resolved against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub epg: Option<PathBuf>,
    pub pages: Option<PathBuf>,
    pub directory: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Model file for `train`/`resolve`; defaults to `<output_dir>/model.json`.
    pub model: Option<PathBuf>,
    /// Blocking cap per query.
    pub k: usize,
    pub score: ScoreConfig,
    /// Learner trained by `train` and used by `resolve`.
    pub learner: LearnerSpec,
    /// Learners compared by `evaluate`, next to the score model.
    pub learners: Vec<LearnerSpec>,
    pub seed: u64,
    pub folds: usize,
    pub cost: CostMatrix,
    pub mode: Mode,
    pub alpha: f64,
    pub resolver: ResolverChoice,
    /// Minimum coreference weight for page clusters.
    pub cluster_tau: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            epg: None,
            pages: None,
            directory: None,
            labels: None,
            output_dir: PathBuf::from("out"),
            model: None,
            k: DEFAULT_K,
            score: ScoreConfig::default(),
            learner: LearnerSpec::default_for(ModelKind::Logistic),
            learners: vec![
                LearnerSpec::default_for(ModelKind::Logistic),
                LearnerSpec::default_for(ModelKind::LinearSvm),
                LearnerSpec::default_for(ModelKind::RandomForest),
            ],
            seed: 0,
            folds: 10,
            cost: CostMatrix::default(),
            mode: Mode::MostSuitable,
            alpha: fanlink_core::graph::DEFAULT_ALPHA,
            resolver: ResolverChoice::Learner,
            cluster_tau: 0.5,
        }
    }
}

/// Command-line values that replace config keys one-for-one.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub epg: Option<PathBuf>,
    pub pages: Option<PathBuf>,
    pub directory: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub k: Option<usize>,
    pub threshold: Option<f64>,
    pub learner: Option<ModelKind>,
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub c_fp: Option<f64>,
    pub c_fn: Option<f64>,
    pub mode: Option<Mode>,
    pub alpha: Option<f64>,
    pub resolver: Option<ResolverChoice>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.epg,
            &mut self.pages,
            &mut self.directory,
            &mut self.labels,
            &mut self.model,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    pub fn apply(&mut self, o: Overrides) -> Result<(), CliError> {
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = o.$field { self.$field = Some(v); } )* };
        }
        take!(epg, pages, directory, labels, model);
        if let Some(v) = o.output_dir {
            self.output_dir = v;
        }
        if let Some(v) = o.k {
            self.k = v;
        }
        if let Some(t) = o.threshold {
            self.score = self.score.clone().with_threshold(t).map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(kind) = o.learner {
            if self.learner.kind() != kind {
                self.learner = LearnerSpec::default_for(kind);
            }
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.folds {
            self.folds = v;
        }
        if let Some(v) = o.c_fp {
            self.cost.c_fp = v;
        }
        if let Some(v) = o.c_fn {
            self.cost.c_fn = v;
        }
        if let Some(v) = o.mode {
            self.mode = v;
        }
        if let Some(v) = o.alpha {
            self.alpha = v;
        }
        if let Some(v) = o.resolver {
            self.resolver = v;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.cluster_tau) {
            return bad(format!("cluster_tau {} outside [0, 1]", self.cluster_tau));
        }
        self.cost.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    /// An input path that must be configured and exist.
    pub fn input(&self, which: &'static str) -> Result<&Path, CliError> {
        let path = match which {
            "epg" => &self.epg,
            "pages" => &self.pages,
            "directory" => &self.directory,
            "labels" => &self.labels,
            _ => unreachable!("unknown input {which}"),
        };
        let path = path
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("no `{which}` path configured")))?;
        if !path.exists() {
            return Err(CliError::Config(format!(
                "{which} file {} does not exist",
                path.display()
            )));
        }
        Ok(path)
    }

    pub fn model_path(&self) -> PathBuf {
        self.model
            .clone()
            .unwrap_or_else(|| self.output_dir.join("model.json"))
    }

    /// Learner list for evaluation with the run seed applied.
    pub fn seeded_learners(&self) -> Vec<LearnerSpec> {
        self.learners.iter().cloned().map(|l| l.with_seed(self.seed)).collect()
    }
}
