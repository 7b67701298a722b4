//! Hook features connecting a show to a fanpage.
//!
//! Every feature lies in `[0, 1]`. Flags (`f3`..`f9`) are exactly 0 or 1.
//! Missing optional page content never counts as evidence: a flag on an
//! absent field is 0 and a ratio on an absent field is 0.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use url::Url;

use crate::epg::{normalize_title, Show};
use crate::error::{Error, Result};
use crate::pages::FanPage;

pub const NUM_FEATURES: usize = 12;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "f1_name_sim",
    "f2_token_jaccard",
    "f3_name_exact",
    "f4_category_match",
    "f5_channel_in_page",
    "f6_channel_url_in_page",
    "f7_website_is_channel_site",
    "f8_site_mentions_channel",
    "f9_site_mentions_title",
    "f10_propernoun_overlap",
    "f11_likes_norm",
    "f12_talking_norm",
];

/// Index of a feature by its full name (`f1_name_sim`) or short id (`f1`).
pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|&full| {
        full == name || full.split('_').next() == Some(name)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub f1_name_sim: f64,
    pub f2_token_jaccard: f64,
    pub f3_name_exact: f64,
    pub f4_category_match: f64,
    pub f5_channel_in_page: f64,
    pub f6_channel_url_in_page: f64,
    pub f7_website_is_channel_site: f64,
    pub f8_site_mentions_channel: f64,
    pub f9_site_mentions_title: f64,
    pub f10_propernoun_overlap: f64,
    pub f11_likes_norm: f64,
    pub f12_talking_norm: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.f1_name_sim,
            self.f2_token_jaccard,
            self.f3_name_exact,
            self.f4_category_match,
            self.f5_channel_in_page,
            self.f6_channel_url_in_page,
            self.f7_website_is_channel_site,
            self.f8_site_mentions_channel,
            self.f9_site_mentions_title,
            self.f10_propernoun_overlap,
            self.f11_likes_norm,
            self.f12_talking_norm,
        ]
    }

    pub fn from_array(v: [f64; NUM_FEATURES]) -> Self {
        FeatureVector {
            f1_name_sim: v[0],
            f2_token_jaccard: v[1],
            f3_name_exact: v[2],
            f4_category_match: v[3],
            f5_channel_in_page: v[4],
            f6_channel_url_in_page: v[5],
            f7_website_is_channel_site: v[6],
            f8_site_mentions_channel: v[7],
            f9_site_mentions_title: v[8],
            f10_propernoun_overlap: v[9],
            f11_likes_norm: v[10],
            f12_talking_norm: v[11],
        }
    }

    pub fn is_flag(index: usize) -> bool {
        (2..=8).contains(&index)
    }
}

/// Offline stand-in for looking up channel websites and matching EPG
/// categories to page categories.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelDirectory {
    #[serde(default)]
    pub channels: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub categories: BTreeMap<String, Vec<String>>,
}

impl ChannelDirectory {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::malformed("channel directory", e))
    }

    /// Official domains of a channel, normalized with [`domain_of`]-style
    /// casing. Names match exactly or, failing that, case-insensitively.
    pub fn channel_domains(&self, channel: &str) -> Option<Vec<String>> {
        let channel = channel.trim();
        let domains = self.channels.get(channel).or_else(|| {
            let folded = channel.to_lowercase();
            self.channels
                .iter()
                .find(|(k, _)| k.trim().to_lowercase() == folded)
                .map(|(_, v)| v)
        })?;
        Some(
            domains
                .iter()
                .map(|d| d.trim().trim_start_matches("www.").to_lowercase())
                .filter(|d| !d.is_empty())
                .collect(),
        )
    }

    pub fn has_channel(&self, channel: &str) -> bool {
        self.channel_domains(channel).is_some()
    }

    pub fn category_matches(&self, epg_category: &str, page_category: &str) -> bool {
        let epg = epg_category.trim().to_lowercase();
        let page = page_category.trim().to_lowercase();
        if epg.is_empty() || page.is_empty() {
            return false;
        }
        self.categories
            .iter()
            .filter(|(k, _)| k.trim().to_lowercase() == epg)
            .flat_map(|(_, v)| v)
            .any(|c| c.trim().to_lowercase() == page)
    }
}

/// Run-wide maxima of the engagement counts, used to normalize them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngagementMaxima {
    pub likes: u64,
    pub talking_about: u64,
}

impl EngagementMaxima {
    pub fn from_pages<'a, I: IntoIterator<Item = &'a FanPage>>(pages: I) -> Self {
        pages.into_iter().fold(Self::default(), |m, p| EngagementMaxima {
            likes: m.likes.max(p.likes),
            talking_about: m.talking_about.max(p.talking_about),
        })
    }
}

/// Character-level edit distance with unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[b.len()]
}

pub fn name_similarity(a: &str, b: &str) -> f64 {
    let (a, b) = (normalize_title(a), normalize_title(b));
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&a, &b) as f64 / longest as f64
}

fn token_set(s: &str) -> BTreeSet<String> {
    normalize_title(s)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn token_jaccard(a: &str, b: &str) -> f64 {
    let (a, b) = (token_set(a), token_set(b));
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Proper nouns by capitalization.
///
/// Returns maximal runs of capitalized words, casefolded. Punctuation
/// trailing a word ends the run. A run made only of a sentence's first
/// word is dropped, since that word is capitalized regardless.
pub fn extract_proper_nouns(text: &str) -> BTreeSet<String> {
    let mut found = BTreeSet::new();
    let mut run: Vec<String> = Vec::new();
    let mut run_starts_sentence = false;
    let mut sentence_start = true;

    let mut flush = |run: &mut Vec<String>, starts_sentence: bool| {
        if !run.is_empty() && !(run.len() == 1 && starts_sentence) {
            found.insert(run.join(" "));
        }
        run.clear();
    };

    for raw in text.split_whitespace() {
        let word = raw.trim_matches(|c: char| !c.is_alphanumeric());
        let trailing = &raw[raw.trim_end_matches(|c: char| !c.is_alphanumeric()).len()..];
        let capitalized = word
            .chars()
            .find(|c| c.is_alphabetic())
            .is_some_and(char::is_uppercase)
            && word.chars().next().is_some_and(|c| c.is_alphanumeric());

        if capitalized {
            if run.is_empty() {
                run_starts_sentence = sentence_start;
            }
            run.push(word.to_lowercase());
        } else {
            flush(&mut run, run_starts_sentence);
        }
        if !trailing.is_empty() {
            flush(&mut run, run_starts_sentence);
        }
        sentence_start = trailing.contains(['.', '!', '?']) || word.is_empty() && sentence_start;
    }
    flush(&mut run, run_starts_sentence);
    found
}

/// Case-insensitive substring test. Absent text or an empty needle is 0.
pub fn contains_mention(haystack: Option<&str>, needle: &str) -> f64 {
    let needle = needle.trim().to_lowercase();
    match haystack {
        Some(h) if !needle.is_empty() && h.to_lowercase().contains(&needle) => 1.0,
        _ => 0.0,
    }
}

/// Lowercased host without a leading `www.`; empty when unparseable.
/// Scheme-less inputs such as `www.bbc.co.uk/x` are read as `http://`.
pub fn domain_of(url: &str) -> String {
    let url = url.trim();
    let parsed = Url::parse(url).ok().filter(|u| u.host_str().is_some()).or_else(|| {
        let looks_like_host =
            !url.is_empty() && !url.contains("://") && !url.contains(char::is_whitespace) && url.contains('.');
        looks_like_host
            .then(|| Url::parse(&format!("http://{url}")).ok())
            .flatten()
    });
    parsed
        .and_then(|u| u.host_str().map(str::to_lowercase))
        .map(|h| h.strip_prefix("www.").map(str::to_string).unwrap_or(h))
        .unwrap_or_default()
}

/// `ln(1 + count) / ln(1 + max_count)`, clamped to 1; 0 when the maximum is 0.
pub fn engagement_norm(count: u64, max_count: u64) -> f64 {
    if max_count == 0 {
        return 0.0;
    }
    ((count as f64).ln_1p() / (max_count as f64).ln_1p()).min(1.0)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn extract_features(
    show: &Show,
    page: &FanPage,
    dir: &ChannelDirectory,
    maxima: EngagementMaxima,
) -> Result<FeatureVector> {
    let channel = show.key.channel.as_str();
    let domains = dir
        .channel_domains(channel)
        .ok_or_else(|| Error::MissingChannel(channel.to_string()))?;
    let title = show.display_title.as_str();
    let about = page.about.as_deref();
    let site_text = page.site_text.as_deref();

    let domain_in = |text: Option<&str>| domains.iter().any(|d| contains_mention(text, d) > 0.0);
    let website_domain = page.website.as_deref().map(domain_of).unwrap_or_default();

    let propernoun_overlap = match show.description.as_deref() {
        Some(desc) => {
            let in_desc = extract_proper_nouns(desc);
            if in_desc.is_empty() {
                0.0
            } else {
                let in_about = about.map(extract_proper_nouns).unwrap_or_default();
                in_desc.intersection(&in_about).count() as f64 / in_desc.len() as f64
            }
        }
        None => 0.0,
    };

    Ok(FeatureVector {
        f1_name_sim: name_similarity(title, &page.name),
        f2_token_jaccard: token_jaccard(title, &page.name),
        f3_name_exact: flag(normalize_title(title) == normalize_title(&page.name)),
        f4_category_match: flag(dir.category_matches(&show.category, &page.category)),
        f5_channel_in_page: contains_mention(about, channel),
        f6_channel_url_in_page: flag(domain_in(about) || domain_in(Some(&page.link))),
        f7_website_is_channel_site: flag(
            !website_domain.is_empty() && domains.contains(&website_domain),
        ),
        f8_site_mentions_channel: contains_mention(site_text, channel),
        f9_site_mentions_title: contains_mention(site_text, title),
        f10_propernoun_overlap: propernoun_overlap,
        f11_likes_norm: engagement_norm(page.likes, maxima.likes),
        f12_talking_norm: engagement_norm(page.talking_about, maxima.talking_about),
    })
}
