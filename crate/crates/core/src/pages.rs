//! Fanpage storage and blocking.
//!
//! Blocking is a capped top-k search over page names. The offline index
//! scores a page by the sum of `idf(t)^2` over query tokens it shares, with
//! `idf(t) = ln(1 + N / df(t))`. Anything implementing [`SearchProvider`]
//! can stand in for it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::epg::{normalize_title, Show, ShowKey};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanPage {
    pub page_id: String,
    pub name: String,
    pub link: String,
    pub category: String,
    pub likes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub website: Option<String>,
    pub talking_about: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub about: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_text: Option<String>,
}

/// Pages keyed by id, in load order.
#[derive(Debug, Clone, Default)]
pub struct PageStore {
    pages: Vec<FanPage>,
    by_id: HashMap<String, usize>,
}

impl PageStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, page: FanPage) -> Result<()> {
        if page.name.trim().is_empty() {
            return Err(Error::malformed(
                format!("page `{}`", page.page_id),
                "name is empty",
            ));
        }
        if self.by_id.contains_key(&page.page_id) {
            return Err(Error::DuplicatePageId(page.page_id));
        }
        self.by_id.insert(page.page_id.clone(), self.pages.len());
        self.pages.push(page);
        Ok(())
    }

    pub fn get(&self, page_id: &str) -> Option<&FanPage> {
        self.by_id.get(page_id).map(|&i| &self.pages[i])
    }

    pub fn pages(&self) -> &[FanPage] {
        &self.pages
    }

    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }
}

/// Reads one JSON page object per line. Blank lines are skipped.
pub fn load_pages<R: BufRead>(input: R) -> Result<PageStore> {
    let mut store = PageStore::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let page: FanPage = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(format!("line {}", n + 1), e))?;
        store.insert(page)?;
    }
    Ok(store)
}

fn tokens(text: &str) -> BTreeSet<String> {
    normalize_title(text)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Ranked search over fanpages, returning `(page_id, score)` pairs.
pub trait SearchProvider {
    fn search(&self, query: &str, k: usize) -> Result<Vec<(String, f64)>>;
}

/// Inverted index from normalized name tokens to page ids.
#[derive(Debug, Clone)]
pub struct SearchIndex {
    postings: BTreeMap<String, Vec<String>>,
    num_docs: usize,
}

impl SearchIndex {
    pub fn build(store: &PageStore) -> Self {
        let mut postings: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for page in store.pages() {
            for tok in tokens(&page.name) {
                postings.entry(tok).or_default().push(page.page_id.clone());
            }
        }
        SearchIndex {
            postings,
            num_docs: store.len(),
        }
    }

    pub fn doc_freq(&self, token: &str) -> usize {
        self.postings.get(token).map_or(0, Vec::len)
    }

    pub fn idf(&self, token: &str) -> f64 {
        match self.doc_freq(token) {
            0 => 0.0,
            df => (1.0 + self.num_docs as f64 / df as f64).ln(),
        }
    }
}

impl SearchProvider for SearchIndex {
    fn search(&self, query: &str, k: usize) -> Result<Vec<(String, f64)>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let query_tokens = tokens(query);
        if query_tokens.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let mut scores: HashMap<&str, f64> = HashMap::new();
        for tok in &query_tokens {
            let Some(ids) = self.postings.get(tok) else {
                continue;
            };
            let w = self.idf(tok).powi(2);
            for id in ids {
                *scores.entry(id.as_str()).or_default() += w;
            }
        }
        let mut ranked: Vec<(String, f64)> = scores
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(id, s)| (id.to_string(), s))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k);
        Ok(ranked)
    }
}

/// An A-B edge produced by blocking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEdge {
    pub show_key: ShowKey,
    pub page_id: String,
    pub retrieval_rank: usize,
    pub retrieval_score: f64,
}

/// Queries the provider with each show's display title. Shows whose
/// title normalizes to nothing produce no edges.
pub fn block<P: SearchProvider + ?Sized>(
    shows: &[Show],
    provider: &P,
    k: usize,
) -> Result<Vec<CandidateEdge>> {
    let mut edges = Vec::new();
    for show in shows {
        let results = match provider.search(&show.display_title, k) {
            Ok(r) => r,
            Err(Error::EmptyQuery) => continue,
            Err(e) => return Err(e),
        };
        edges.extend(
            results
                .into_iter()
                .enumerate()
                .map(|(i, (page_id, score))| CandidateEdge {
                    show_key: show.key.clone(),
                    page_id,
                    retrieval_rank: i + 1,
                    retrieval_score: score,
                }),
        );
    }
    Ok(edges)
}

/// Candidate CSV: `show_channel,show_norm_title,show_duration,page_id,retrieval_rank,retrieval_score`.
pub fn write_candidates_csv<W: std::io::Write>(edges: &[CandidateEdge], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let row = |w: &mut csv::Writer<W>, fields: [&str; 6]| {
        w.write_record(fields).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::malformed("csv", format!("{other:?}")),
        })
    };
    row(
        &mut w,
        ["show_channel", "show_norm_title", "show_duration", "page_id", "retrieval_rank", "retrieval_score"],
    )?;
    for e in edges {
        row(
            &mut w,
            [
                &e.show_key.channel,
                &e.show_key.norm_title,
                &e.show_key.duration_min.to_string(),
                &e.page_id,
                &e.retrieval_rank.to_string(),
                &e.retrieval_score.to_string(),
            ],
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn page(id: &str, name: &str) -> FanPage {
        FanPage {
            page_id: id.into(),
            name: name.into(),
            link: format!("https://www.facebook.com/{id}"),
            category: "Tv show".into(),
            likes: 0,
            website: None,
            talking_about: 0,
            about: None,
            site_text: None,
        }
    }

    fn store(names: &[(&str, &str)]) -> PageStore {
        let mut s = PageStore::new();
        for (id, name) in names {
            s.insert(page(id, name)).unwrap();
        }
        s
    }

    #[test]
    fn load_empty() {
        assert!(load_pages(&b""[..]).unwrap().is_empty());
    }

    #[test]
    fn load_documentary_page() {
        let line = r#"{"page_id": "109813", "name": "Britain From Above", "link": "www.facebook.com/pages/Britain-From-Above/109813", "category": "Tv show", "likes": 282, "website": "www.bbc.co.uk/britainfromabove", "talking_about": 3}"#;
        let s = load_pages(line.as_bytes()).unwrap();
        assert_eq!(s.len(), 1);
        let p = s.get("109813").unwrap();
        assert_eq!(p.likes, 282);
        assert_eq!(p.talking_about, 3);
        assert_eq!(p.about, None);
    }

    #[test]
    fn load_duplicate_id() {
        let text = "{\"page_id\":\"a\",\"name\":\"x\",\"link\":\"l\",\"category\":\"c\",\"likes\":1,\"talking_about\":0}\n\
                    {\"page_id\":\"a\",\"name\":\"y\",\"link\":\"l\",\"category\":\"c\",\"likes\":1,\"talking_about\":0}\n";
        assert!(matches!(
            load_pages(text.as_bytes()),
            Err(Error::DuplicatePageId(id)) if id == "a"
        ));
    }

    #[test]
    fn load_negative_likes_rejected() {
        let text = "{\"page_id\":\"a\",\"name\":\"x\",\"link\":\"l\",\"category\":\"c\",\"likes\":-1,\"talking_about\":0}";
        assert!(matches!(
            load_pages(text.as_bytes()),
            Err(Error::MalformedInput { position, .. }) if position == "line 1"
        ));
    }

    #[test]
    fn search_exact_unique_name() {
        let s = store(&[("p1", "Britain From Above"), ("p2", "BBC News"), ("p3", "Cute Cats")]);
        let idx = SearchIndex::build(&s);
        let hits = idx.search("britain from above", 10).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].0, "p1");
    }

    #[test]
    fn search_no_shared_token() {
        let s = store(&[("p1", "Britain From Above"), ("p2", "BBC News")]);
        let idx = SearchIndex::build(&s);
        assert!(idx.search("animal planet", 10).unwrap().is_empty());
    }

    #[test]
    fn search_empty_query() {
        let idx = SearchIndex::build(&store(&[("p1", "x")]));
        assert!(matches!(idx.search("   ", 10), Err(Error::EmptyQuery)));
    }

    #[test]
    fn search_ties_break_on_page_id() {
        let s = store(&[("b", "news"), ("a", "news"), ("c", "news")]);
        let hits = SearchIndex::build(&s).search("news", 2).unwrap();
        assert_eq!(hits.iter().map(|h| h.0.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn search_scores_are_idf_squared_sums() {
        // N = 3; df(bbc) = 2, df(news) = 1
        let s = store(&[("p1", "BBC News"), ("p2", "BBC Two"), ("p3", "Cute Cats")]);
        let hits = SearchIndex::build(&s).search("bbc news", 10).unwrap();
        let bbc = (1.0f64 + 3.0 / 2.0).ln().powi(2);
        let news = (1.0f64 + 3.0).ln().powi(2);
        assert_eq!(hits[0].0, "p1");
        assert!((hits[0].1 - (bbc + news)).abs() < 1e-12);
        assert_eq!(hits[1].0, "p2");
        assert!((hits[1].1 - bbc).abs() < 1e-12);
    }

    fn show(title: &str) -> Show {
        Show {
            key: ShowKey {
                channel: "C".into(),
                norm_title: normalize_title(title),
                duration_min: 30,
            },
            display_title: title.into(),
            record_ids: vec!["1".into()],
            description: None,
            category: String::new(),
        }
    }

    #[test]
    fn block_examples() {
        let s = store(&[("p1", "Britain From Above"), ("p2", "BBC News")]);
        let idx = SearchIndex::build(&s);
        assert!(block(&[], &idx, 10).unwrap().is_empty());
        let edges = block(&[show("Britain from Above"), show("  ")], &idx, 10).unwrap();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].page_id, "p1");
        assert_eq!(edges[0].retrieval_rank, 1);
    }
}
