//! Subcommand bodies. Each one reads the configured inputs, writes its
//! artifacts under the output directory and returns a one-line summary.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use fanlink_core::evaluation::{select_threshold, GoldLabel, Mode};
use fanlink_core::graph::{self, BipartiteGraph};
use fanlink_core::learners::Model;
use fanlink_core::pages;
use fanlink_core::score;
use serde::Serialize;

use crate::config::{PipelineConfig, ResolverChoice};
use crate::error::CliError;
use crate::labels::{self, LabeledPair};
use crate::pipeline::{self, Corpus, Scored};

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let ctx = || format!("writing {}", path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(ctx(), e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(ctx(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(ctx(), e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

fn csv_bytes(
    write: impl FnOnce(&mut Vec<u8>) -> fanlink_core::Result<()>,
) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn out(cfg: &PipelineConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

#[derive(Serialize)]
struct ShowSummary<'a> {
    key: String,
    channel: &'a str,
    norm_title: &'a str,
    duration_min: u32,
    display_title: &'a str,
    category: &'a str,
    record_ids: &'a [String],
}

pub fn ingest(cfg: &PipelineConfig) -> Result<String, CliError> {
    let records = pipeline::read_records(cfg)?;
    let shows = fanlink_core::epg::aggregate(&records);
    let summary: Vec<ShowSummary> = shows
        .iter()
        .map(|s| ShowSummary {
            key: s.key.to_string(),
            channel: &s.key.channel,
            norm_title: &s.key.norm_title,
            duration_min: s.key.duration_min,
            display_title: &s.display_title,
            category: &s.category,
            record_ids: &s.record_ids,
        })
        .collect();
    write_atomic(&out(cfg, "shows.json"), to_json(&summary).as_bytes())?;
    Ok(format!("{} records, {} shows", records.len(), shows.len()))
}

pub fn block(cfg: &PipelineConfig) -> Result<String, CliError> {
    let corpus = Corpus::load(cfg)?;
    let csv = csv_bytes(|buf| pages::write_candidates_csv(&corpus.edges, buf))?;
    write_atomic(&out(cfg, "candidates.csv"), &csv)?;
    let hist = pipeline::block_histogram(&corpus);
    let json = to_json(&hist);
    write_atomic(&out(cfg, "block_histogram.json"), json.as_bytes())?;
    Ok(format!(
        "{} queries, {} candidate edges\n{}",
        hist.queries,
        hist.edges,
        json.trim_end()
    ))
}

fn excerpt(text: Option<&str>, max: usize) -> String {
    let text = text.unwrap_or("").trim();
    if text.chars().count() <= max {
        text.to_string()
    } else {
        let cut: String = text.chars().take(max).collect();
        format!("{cut}...")
    }
}

/// Interactive labeling over unlabeled candidate pairs. Answers are
/// `u`nrelated, `r`elated, `b`est, `s`kip and `q`uit; end of input quits.
/// The labels file is rewritten after every answer.
pub fn label<R: BufRead, W: Write>(
    cfg: &PipelineConfig,
    input: &mut R,
    prompt: &mut W,
) -> Result<String, CliError> {
    let corpus = Corpus::load(cfg)?;
    let path = cfg
        .labels
        .clone()
        .ok_or_else(|| CliError::Config("no `labels` path configured".into()))?;
    let mut pairs = if path.exists() {
        labels::read(&path)?
    } else {
        Vec::new()
    };
    let pending: Vec<_> = corpus
        .edges
        .iter()
        .filter(|e| {
            !pairs
                .iter()
                .any(|p| p.show_key == e.show_key && p.page_id == e.page_id)
        })
        .collect();
    let io_err = |e| CliError::io("writing prompt", e);
    if pending.is_empty() {
        return Ok("no unlabeled candidates".into());
    }

    let mut answered = 0usize;
    let mut line = String::new();
    'pairs: for edge in pending {
        let show = corpus.show(&edge.show_key).expect("edge show exists");
        let page = corpus.store.get(&edge.page_id).expect("edge page exists");
        writeln!(
            prompt,
            "\nshow: {} [{}]\npage: {} ({})\nlink: {}\nabout: {}",
            show.display_title,
            edge.show_key,
            page.name,
            page.page_id,
            page.link,
            excerpt(page.about.as_deref(), 160)
        )
        .map_err(io_err)?;
        let label = loop {
            write!(prompt, "[u]nrelated [r]elated [b]est [s]kip [q]uit > ").map_err(io_err)?;
            prompt.flush().map_err(io_err)?;
            line.clear();
            let n = input
                .read_line(&mut line)
                .map_err(|e| CliError::io("reading answer", e))?;
            match (n, line.trim()) {
                (0, _) | (_, "q") => break 'pairs,
                (_, "s") => continue 'pairs,
                (_, "u") => break GoldLabel::Unrelated,
                (_, "r") => break GoldLabel::Related,
                (_, "b") => break GoldLabel::Best,
                (_, other) => writeln!(prompt, "unknown answer `{other}`").map_err(io_err)?,
            }
        };
        if label == GoldLabel::Best {
            for p in pairs
                .iter_mut()
                .filter(|p| p.show_key == edge.show_key && p.label == GoldLabel::Best)
            {
                writeln!(
                    prompt,
                    "warning: {} was best for this show; now related",
                    p.page_id
                )
                .map_err(io_err)?;
                p.label = GoldLabel::Related;
            }
        }
        pairs.push(LabeledPair {
            show_key: edge.show_key.clone(),
            page_id: edge.page_id.clone(),
            label,
        });
        answered += 1;
        write_atomic(&path, labels::render(&pairs).as_bytes())?;
    }
    Ok(format!("{answered} pairs labeled, {} total", pairs.len()))
}

fn labeled_rows(cfg: &PipelineConfig, corpus: &Corpus) -> Result<Vec<pipeline::PairRow>, CliError> {
    let pairs = labels::read(cfg.input("labels")?)?;
    let (rows, unused) = corpus.labeled_rows(&pairs)?;
    if !unused.is_empty() {
        eprintln!(
            "warning: {} labeled pairs are not among the candidates and were ignored",
            unused.len()
        );
    }
    Ok(rows)
}

pub fn train(cfg: &PipelineConfig) -> Result<String, CliError> {
    let corpus = Corpus::load(cfg)?;
    let rows = labeled_rows(cfg, &corpus)?;
    let data = pipeline::dataset(&rows);
    let mut model = cfg.learner.clone().with_seed(cfg.seed).train(&data, &cfg.cost)?;
    let conf = data
        .rows()
        .iter()
        .map(|r| model.predict_proba(r))
        .collect::<Result<Vec<_>, _>>()?;
    model.threshold = select_threshold(&conf, data.labels(), &cfg.cost)?.threshold;
    let path = cfg.model_path();
    write_atomic(&path, model.to_json().as_bytes())?;
    Ok(format!(
        "trained {} on {} pairs, threshold {:.4}, wrote {}",
        model.kind.name(),
        data.len(),
        model.threshold,
        path.display()
    ))
}

pub fn evaluate(cfg: &PipelineConfig) -> Result<String, CliError> {
    let corpus = Corpus::load(cfg)?;
    let rows = labeled_rows(cfg, &corpus)?;
    let report = pipeline::evaluate(&rows, cfg)?;
    write_atomic(&out(cfg, "eval_report.json"), report.to_json().as_bytes())?;
    let table = report.to_string();
    write_atomic(&out(cfg, "eval_report.txt"), table.as_bytes())?;
    Ok(table.trim_end().to_string())
}

#[derive(Serialize)]
struct Selection<'a> {
    page_id: &'a str,
    rank_score: f64,
    confidence: f64,
}

#[derive(Serialize)]
struct Recommendation<'a> {
    show_key: String,
    mode: Mode,
    selections: Vec<Selection<'a>>,
}

pub fn resolve(cfg: &PipelineConfig) -> Result<String, CliError> {
    let corpus = Corpus::load(cfg)?;
    let model = match cfg.resolver {
        ResolverChoice::ScoreModel => None,
        ResolverChoice::Learner => {
            let path = cfg.model_path();
            let text = std::fs::read_to_string(&path).map_err(|e| {
                CliError::Config(format!(
                    "cannot read model {}: {e}; run `fanlink train` first",
                    path.display()
                ))
            })?;
            Some(Model::from_json(&text)?)
        }
    };

    let features = corpus
        .edges
        .iter()
        .map(|e| corpus.features(&e.show_key, &e.page_id))
        .collect::<Result<Vec<_>, _>>()?;
    let mut scored = Vec::with_capacity(features.len());
    for (e, fv) in corpus.edges.iter().zip(&features) {
        let (confidence, decision) = match &model {
            None => {
                let s = score::score(fv, &cfg.score);
                (s / score::SCALE, score::decide(s, &cfg.score))
            }
            Some(m) => {
                let c = m.predict_proba_fv(fv)?;
                (c, c >= m.threshold)
            }
        };
        scored.push(Scored {
            show_key: &e.show_key,
            page_id: &e.page_id,
            features: fv,
            confidence,
            decision,
        });
    }

    let positive = scored
        .iter()
        .filter(|s| s.decision)
        .map(|s| (s.show_key.clone(), s.page_id.to_string(), s.confidence));
    let g = BipartiteGraph::build(positive)?;
    let coref = graph::coreference_edges(&g, 0.0);
    let clusters = graph::cluster_pages(&coref, cfg.cluster_tau);

    let selected = pipeline::select_per_show(&scored, cfg.alpha, cfg.mode)?;
    let recs: Vec<Recommendation> = selected
        .iter()
        .map(|(o, chosen)| Recommendation {
            show_key: o.show_key.to_string(),
            mode: cfg.mode,
            selections: chosen
                .iter()
                .map(|r| Selection {
                    page_id: &r.page_id,
                    rank_score: r.rank_score,
                    confidence: r.confidence,
                })
                .collect(),
        })
        .collect();

    write_atomic(&out(cfg, "recommendations.json"), to_json(&recs).as_bytes())?;
    let edges_csv = csv_bytes(|buf| g.write_csv(buf))?;
    write_atomic(&out(cfg, "graph_edges.csv"), &edges_csv)?;
    let coref_csv = csv_bytes(|buf| graph::write_coreference_csv(&coref, buf))?;
    write_atomic(&out(cfg, "coreference.csv"), &coref_csv)?;
    write_atomic(&out(cfg, "clusters.json"), to_json(&clusters).as_bytes())?;

    let linked = recs.iter().filter(|r| !r.selections.is_empty()).count();
    Ok(format!(
        "{linked} of {} shows linked ({}), {} graph edges, {} clusters",
        recs.len(),
        cfg.mode.name(),
        g.edge_count(),
        clusters.len()
    ))
}

