//! Stages shared by the subcommands.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use fanlink_core::epg::{self, EpgRecord, Show};
use fanlink_core::evaluation::{
    self, cross_validate, evaluate_modes, GoldLabel, MethodReport, Mode, Resolver, ShowOutcome,
};
use fanlink_core::features::{extract_features, ChannelDirectory, EngagementMaxima, FeatureVector};
use fanlink_core::graph::{self, Candidate, Ranked};
use fanlink_core::learners::Dataset;
use fanlink_core::pages::{self, CandidateEdge, PageStore, SearchIndex};
use fanlink_core::{Error, EvalReport, ShowKey};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::labels::{self, LabeledPair};

fn open(path: &Path, what: &str) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(format!("opening {what} {}", path.display()), e))
}

pub fn read_records(cfg: &PipelineConfig) -> Result<Vec<EpgRecord>, CliError> {
    let path = cfg.input("epg")?;
    Ok(epg::parse_xmltv(open(path, "EPG")?)?)
}

pub fn read_pages(cfg: &PipelineConfig) -> Result<PageStore, CliError> {
    let path = cfg.input("pages")?;
    Ok(pages::load_pages(open(path, "pages")?)?)
}

pub fn read_directory(cfg: &PipelineConfig) -> Result<ChannelDirectory, CliError> {
    let path = cfg.input("directory")?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading directory {}", path.display()), e))?;
    Ok(ChannelDirectory::from_json(&text)?)
}

/// Shows, pages and blocking output for one run.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub record_count: usize,
    pub shows: Vec<Show>,
    pub store: PageStore,
    pub directory: ChannelDirectory,
    pub edges: Vec<CandidateEdge>,
    /// Engagement maxima over the pages that survived blocking.
    pub maxima: EngagementMaxima,
}

impl Corpus {
    pub fn load(cfg: &PipelineConfig) -> Result<Self, CliError> {
        let records = read_records(cfg)?;
        let store = read_pages(cfg)?;
        let directory = read_directory(cfg)?;
        Self::build(&records, store, directory, cfg.k)
    }

    pub fn build(
        records: &[EpgRecord],
        store: PageStore,
        directory: ChannelDirectory,
        k: usize,
    ) -> Result<Self, CliError> {
        let shows = epg::aggregate(records);
        if let Some(s) = shows.iter().find(|s| !directory.has_channel(&s.key.channel)) {
            return Err(Error::MissingChannel(s.key.channel.clone()).into());
        }
        let index = SearchIndex::build(&store);
        let edges = pages::block(&shows, &index, k)?;
        let candidate_ids: BTreeSet<&str> = edges.iter().map(|e| e.page_id.as_str()).collect();
        let maxima = EngagementMaxima::from_pages(candidate_ids.iter().filter_map(|id| store.get(id)));
        Ok(Corpus {
            record_count: records.len(),
            shows,
            store,
            directory,
            edges,
            maxima,
        })
    }

    pub fn show(&self, key: &ShowKey) -> Option<&Show> {
        self.shows.iter().find(|s| &s.key == key)
    }

    pub fn features(&self, key: &ShowKey, page_id: &str) -> Result<FeatureVector, CliError> {
        let show = self
            .show(key)
            .ok_or_else(|| CliError::Config(format!("unknown show {key}")))?;
        let page = self
            .store
            .get(page_id)
            .ok_or_else(|| CliError::Config(format!("unknown page {page_id}")))?;
        Ok(extract_features(show, page, &self.directory, self.maxima)?)
    }

    /// Candidate pairs that carry a label, in blocking order. Labels for
    /// pairs blocking did not produce are returned separately.
    pub fn labeled_rows(
        &self,
        labels: &[LabeledPair],
    ) -> Result<(Vec<PairRow>, Vec<LabeledPair>), CliError> {
        let gold = labels::gold_map(labels);
        let mut rows = Vec::new();
        let mut used = BTreeSet::new();
        for e in &self.edges {
            let key = (e.show_key.clone(), e.page_id.clone());
            if let Some(&label) = gold.get(&key) {
                rows.push(PairRow {
                    show_key: e.show_key.clone(),
                    page_id: e.page_id.clone(),
                    features: self.features(&e.show_key, &e.page_id)?,
                    label,
                });
                used.insert(key);
            }
        }
        let unused = labels
            .iter()
            .filter(|p| !used.contains(&(p.show_key.clone(), p.page_id.clone())))
            .cloned()
            .collect();
        Ok((rows, unused))
    }
}

/// A labeled show/page pair with its features.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub show_key: ShowKey,
    pub page_id: String,
    pub features: FeatureVector,
    pub label: GoldLabel,
}

pub fn dataset(rows: &[PairRow]) -> Dataset {
    Dataset::from_vectors(rows.iter().map(|r| (&r.features, r.label.is_positive())))
}

/// Resolver output for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored<'a> {
    pub show_key: &'a ShowKey,
    pub page_id: &'a str,
    pub features: &'a FeatureVector,
    pub confidence: f64,
    pub decision: bool,
}

/// Ranks each show's candidates and selects under `mode`. Shows come out
/// in key order.
pub fn select_per_show(
    scored: &[Scored<'_>],
    alpha: f64,
    mode: Mode,
) -> Result<Vec<(ShowOutcome, Vec<Ranked>)>, CliError> {
    let mut by_show: BTreeMap<&ShowKey, Vec<&Scored<'_>>> = BTreeMap::new();
    for s in scored {
        by_show.entry(s.show_key).or_default().push(s);
    }
    by_show
        .into_iter()
        .map(|(key, items)| {
            let candidates: Vec<Candidate> = items
                .iter()
                .map(|s| Candidate {
                    page_id: s.page_id.to_string(),
                    confidence: s.confidence,
                    likes_norm: s.features.f11_likes_norm,
                    talking_norm: s.features.f12_talking_norm,
                })
                .collect();
            let ranked = graph::suitability_rank(&candidates, alpha)?;
            let decisions: HashMap<String, bool> = items
                .iter()
                .map(|s| (s.page_id.to_string(), s.decision))
                .collect();
            let chosen: Vec<Ranked> = graph::select(&ranked, &decisions, mode)
                .into_iter()
                .cloned()
                .collect();
            let outcome = ShowOutcome {
                show_key: key.clone(),
                candidates: items.iter().map(|s| (s.page_id.to_string(), s.decision)).collect(),
                selected: chosen.iter().map(|r| r.page_id.clone()).collect(),
            };
            Ok((outcome, chosen))
        })
        .collect()
}

/// Cross-validates the score model and each configured learner, then
/// scores both selection modes on the held-out decisions.
pub fn evaluate(rows: &[PairRow], cfg: &PipelineConfig) -> Result<EvalReport, CliError> {
    let data = dataset(rows);
    let gold: BTreeMap<(ShowKey, String), GoldLabel> = rows
        .iter()
        .map(|r| ((r.show_key.clone(), r.page_id.clone()), r.label))
        .collect();
    let methods = std::iter::once(Resolver::ScoreModel(cfg.score.clone()))
        .chain(cfg.seeded_learners().into_iter().map(Resolver::Learner));

    let mut report = EvalReport::default();
    for method in methods {
        let cv = cross_validate(&method, &data, cfg.folds, &cfg.cost, cfg.seed)?;
        let scored: Vec<Scored<'_>> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| Scored {
                show_key: &r.show_key,
                page_id: &r.page_id,
                features: &r.features,
                confidence: cv.confidences[i],
                decision: cv.decisions[i],
            })
            .collect();
        for mode in Mode::ALL {
            let outcomes: Vec<ShowOutcome> = select_per_show(&scored, cfg.alpha, mode)?
                .into_iter()
                .map(|(o, _)| o)
                .collect();
            let confusion = evaluate_modes(&outcomes, &gold, mode);
            report
                .entries
                .push(MethodReport::new(method.name(), mode, confusion, cv.mean_threshold()));
        }
    }
    Ok(report)
}

/// Per-query result counts: how many queries returned n results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockHistogram {
    pub queries: usize,
    pub edges: usize,
    pub results_per_query: BTreeMap<usize, usize>,
}

pub fn block_histogram(corpus: &Corpus) -> BlockHistogram {
    let mut per_show: BTreeMap<&ShowKey, usize> =
        corpus.shows.iter().map(|s| (&s.key, 0)).collect();
    for e in &corpus.edges {
        *per_show.entry(&e.show_key).or_default() += 1;
    }
    let mut results_per_query = BTreeMap::new();
    for n in per_show.values() {
        *results_per_query.entry(*n).or_default() += 1;
    }
    BlockHistogram {
        queries: corpus.shows.len(),
        edges: corpus.edges.len(),
        results_per_query,
    }
}

pub use evaluation::select_threshold;
