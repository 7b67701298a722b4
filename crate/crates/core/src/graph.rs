//! Bipartite show/page graph and page coreference.
//!
//! Two pages linked to the same show are taken to refer to the same topic,
//! with a weight equal to the product of the two show/page edge weights.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::epg::ShowKey;
use crate::error::{Error, Result};
use crate::evaluation::Mode;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BipartiteGraph {
    edges: BTreeMap<(ShowKey, String), f64>,
}

impl BipartiteGraph {
    /// Builds the graph, keeping the larger weight for repeated pairs.
    pub fn build<I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ShowKey, String, f64)>,
    {
        let mut g = BipartiteGraph::default();
        for (show, page, weight) in edges {
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::WeightOutOfRange {
                    show: show.to_string(),
                    page,
                    weight,
                });
            }
            let slot = g.edges.entry((show, page)).or_insert(weight);
            *slot = slot.max(weight);
        }
        Ok(g)
    }

    pub fn a_nodes(&self) -> BTreeSet<&ShowKey> {
        self.edges.keys().map(|(s, _)| s).collect()
    }

    pub fn b_nodes(&self) -> BTreeSet<&str> {
        self.edges.keys().map(|(_, p)| p.as_str()).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, show: &ShowKey, page: &str) -> Option<f64> {
        self.edges.get(&(show.clone(), page.to_string())).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&ShowKey, &str, f64)> {
        self.edges.iter().map(|((s, p), &w)| (s, p.as_str(), w))
    }

    /// Neighbors of a show with positive weight.
    pub fn neighbors<'a>(&'a self, show: &'a ShowKey) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.edges
            .range((show.clone(), String::new())..)
            .take_while(move |((s, _), _)| s == show)
            .filter(|(_, &w)| w > 0.0)
            .map(|((_, p), &w)| (p.as_str(), w))
    }

    /// Edge list CSV: `show_key,page_id,weight`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["show_key", "page_id", "weight"]).map_err(csv_err)?;
        for (show, page, weight) in self.edges() {
            w.write_record([show.to_string(), page.to_string(), weight.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::malformed("csv", format!("{other:?}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreferenceEdge {
    /// Lexicographically smaller page id.
    pub page_a: String,
    pub page_b: String,
    pub weight: f64,
    /// Show whose two edges induce this one.
    pub via: ShowKey,
}

/// Page pairs sharing a show. Each unordered pair appears once, with the
/// heaviest weight over all shows linking it (the first such show in key
/// order on ties). Pairs lighter than `min_weight` are dropped.
pub fn coreference_edges(g: &BipartiteGraph, min_weight: f64) -> Vec<CoreferenceEdge> {
    let mut best: BTreeMap<(String, String), (f64, ShowKey)> = BTreeMap::new();
    for show in g.a_nodes() {
        let nbrs: Vec<(&str, f64)> = g.neighbors(show).collect();
        for (i, &(p, wp)) in nbrs.iter().enumerate() {
            for &(q, wq) in &nbrs[i + 1..] {
                let weight = wp * wq;
                let pair = if p < q { (p, q) } else { (q, p) };
                let entry = best
                    .entry((pair.0.to_string(), pair.1.to_string()))
                    .or_insert_with(|| (weight, show.clone()));
                if weight > entry.0 {
                    *entry = (weight, show.clone());
                }
            }
        }
    }
    best.into_iter()
        .filter(|(_, (w, _))| *w >= min_weight)
        .map(|((page_a, page_b), (weight, via))| CoreferenceEdge {
            page_a,
            page_b,
            weight,
            via,
        })
        .collect()
}

/// Coreference CSV: `page_a,page_b,weight,via`.
pub fn write_coreference_csv<W: Write>(edges: &[CoreferenceEdge], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["page_a", "page_b", "weight", "via"]).map_err(csv_err)?;
    for e in edges {
        w.write_record([
            e.page_a.clone(),
            e.page_b.clone(),
            e.weight.to_string(),
            e.via.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Connected components over edges weighing at least `tau`. Singletons
/// are left out; members and clusters are sorted.
pub fn cluster_pages(edges: &[CoreferenceEdge], tau: f64) -> Vec<Vec<String>> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut names: Vec<&str> = Vec::new();
    let mut parent: Vec<usize> = Vec::new();

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    fn intern<'a>(
        name: &'a str,
        index: &mut HashMap<&'a str, usize>,
        names: &mut Vec<&'a str>,
        parent: &mut Vec<usize>,
    ) -> usize {
        *index.entry(name).or_insert_with(|| {
            names.push(name);
            parent.push(parent.len());
            parent.len() - 1
        })
    }

    for e in edges.iter().filter(|e| e.weight >= tau) {
        let a = intern(&e.page_a, &mut index, &mut names, &mut parent);
        let b = intern(&e.page_b, &mut index, &mut names, &mut parent);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }

    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(name.to_string());
    }
    let mut clusters: Vec<Vec<String>> = groups
        .into_values()
        .filter(|g| g.len() > 1)
        .map(|mut g| {
            g.sort();
            g
        })
        .collect();
    clusters.sort();
    clusters
}

/// A candidate page for a show with its resolver confidence and
/// normalized engagement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub page_id: String,
    pub confidence: f64,
    pub likes_norm: f64,
    pub talking_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub page_id: String,
    pub rank_score: f64,
    pub confidence: f64,
}

pub const DEFAULT_ALPHA: f64 = 0.7;

/// Orders candidates by `alpha * confidence + (1 - alpha) * engagement`,
/// where engagement is the mean of the two normalized counts. Ties go to
/// the smaller page id.
pub fn suitability_rank(candidates: &[Candidate], alpha: f64) -> Result<Vec<Ranked>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    let mut ranked = candidates
        .iter()
        .map(|c| {
            for (what, v) in [
                ("confidence", c.confidence),
                ("likes_norm", c.likes_norm),
                ("talking_norm", c.talking_norm),
            ] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidArgument(format!(
                        "{what} {v} of page `{}` outside [0, 1]",
                        c.page_id
                    )));
                }
            }
            let engagement = (c.likes_norm + c.talking_norm) / 2.0;
            Ok(Ranked {
                page_id: c.page_id.clone(),
                rank_score: alpha * c.confidence + (1.0 - alpha) * engagement,
                confidence: c.confidence,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        b.rank_score
            .total_cmp(&a.rank_score)
            .then_with(|| a.page_id.cmp(&b.page_id))
    });
    Ok(ranked)
}

/// Keeps only pages with a positive decision (pages without one count as
/// negative), then takes the top one or all of them depending on `mode`.
pub fn select<'a>(
    ranked: &'a [Ranked],
    decisions: &HashMap<String, bool>,
    mode: Mode,
) -> Vec<&'a Ranked> {
    let survivors = ranked
        .iter()
        .filter(|r| decisions.get(&r.page_id).copied().unwrap_or(false));
    match mode {
        Mode::MostSuitable => survivors.take(1).collect(),
        Mode::AnythingSuitable => survivors.collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(t: &str) -> ShowKey {
        ShowKey { channel: "C".into(), norm_title: t.into(), duration_min: 30 }
    }

    #[test]
    fn build_examples() {
        let g = BipartiteGraph::build(Vec::new()).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = BipartiteGraph::build(vec![
            (key("a"), "B1".to_string(), 0.3),
            (key("a"), "B1".to_string(), 0.8),
        ])
        .unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(&key("a"), "B1"), Some(0.8));
        assert!(matches!(
            BipartiteGraph::build(vec![(key("a"), "B1".to_string(), 1.5)]),
            Err(Error::WeightOutOfRange { .. })
        ));
        assert!(BipartiteGraph::build(vec![(key("a"), "B1".to_string(), f64::NAN)]).is_err());
    }

    #[test]
    fn coreference_product() {
        let g = BipartiteGraph::build(vec![
            (key("a3"), "B7".to_string(), 0.8),
            (key("a3"), "B8".to_string(), 0.5),
        ])
        .unwrap();
        let e = coreference_edges(&g, 0.0);
        assert_eq!(e.len(), 1);
        assert_eq!((e[0].page_a.as_str(), e[0].page_b.as_str()), ("B7", "B8"));
        assert!((e[0].weight - 0.4).abs() < 1e-12);
        assert_eq!(e[0].via, key("a3"));
        assert!(coreference_edges(&g, 0.5).is_empty());
    }

    #[test]
    fn coreference_star_and_max() {
        let g = BipartiteGraph::build(vec![
            (key("a"), "B1".to_string(), 1.0),
            (key("a"), "B2".to_string(), 1.0),
            (key("a"), "B3".to_string(), 0.5),
            (key("b"), "B3".to_string(), 1.0),
            (key("b"), "B1".to_string(), 0.9),
        ])
        .unwrap();
        let e = coreference_edges(&g, 0.0);
        assert_eq!(e.len(), 3);
        assert_eq!(e[0].weight, 1.0);
        let b1b3 = e.iter().find(|x| x.page_a == "B1" && x.page_b == "B3").unwrap();
        assert!((b1b3.weight - 0.9).abs() < 1e-12);
        assert_eq!(b1b3.via, key("b"));
    }

    fn core(a: &str, b: &str, w: f64) -> CoreferenceEdge {
        CoreferenceEdge { page_a: a.into(), page_b: b.into(), weight: w, via: key("x") }
    }

    #[test]
    fn clusters() {
        assert!(cluster_pages(&[], 0.5).is_empty());
        let chain = [core("B1", "B2", 0.9), core("B2", "B3", 0.9)];
        assert_eq!(cluster_pages(&chain, 0.5), vec![vec!["B1", "B2", "B3"]]);
        assert!(cluster_pages(&chain, 0.95).is_empty());
        let two = [core("B4", "B5", 0.9), core("B1", "B2", 0.9), core("B2", "B3", 0.1)];
        assert_eq!(cluster_pages(&two, 0.5), vec![vec!["B1", "B2"], vec!["B4", "B5"]]);
    }

    fn cand(id: &str, confidence: f64, engagement: f64) -> Candidate {
        Candidate { page_id: id.into(), confidence, likes_norm: engagement, talking_norm: engagement }
    }

    #[test]
    fn rank_examples() {
        let r = suitability_rank(&[cand("a", 0.2, 1.0), cand("b", 0.9, 0.0)], 1.0).unwrap();
        assert_eq!(r[0].page_id, "b");
        let r = suitability_rank(&[cand("a", 0.5, 0.1), cand("b", 0.5, 0.9)], 0.7).unwrap();
        assert_eq!(r[0].page_id, "b");
        let r = suitability_rank(&[cand("p", 0.8, 0.0), cand("q", 0.7, 1.0)], 0.7).unwrap();
        assert_eq!(r[0].page_id, "q");
        assert!((r[0].rank_score - 0.79).abs() < 1e-12);
        assert!((r[1].rank_score - 0.56).abs() < 1e-12);
        assert!(suitability_rank(&[cand("p", 1.2, 0.0)], 0.7).is_err());
        assert!(suitability_rank(&[], 1.5).is_err());
    }

    #[test]
    fn select_rules() {
        let ranked = suitability_rank(&[cand("a", 0.9, 0.5), cand("b", 0.6, 0.5)], 0.7).unwrap();
        let none: HashMap<String, bool> = [("a".into(), false), ("b".into(), false)].into();
        assert!(select(&ranked, &none, Mode::MostSuitable).is_empty());
        assert!(select(&ranked, &none, Mode::AnythingSuitable).is_empty());
        let both: HashMap<String, bool> = [("a".into(), true), ("b".into(), true)].into();
        let top = select(&ranked, &both, Mode::MostSuitable);
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].page_id, "a");
        assert_eq!(select(&ranked, &both, Mode::AnythingSuitable).len(), 2);
    }

    #[test]
    fn csv_exports() {
        let g = BipartiteGraph::build(vec![
            (key("a"), "B1".to_string(), 0.5),
            (key("a"), "B2".to_string(), 1.0),
        ])
        .unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "show_key,page_id,weight\nC|a|30,B1,0.5\nC|a|30,B2,1\n"
        );
        let mut buf = Vec::new();
        write_coreference_csv(&coreference_edges(&g, 0.0), &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "page_a,page_b,weight,via\nB1,B2,0.5,C|a|30\n"
        );
    }
}
