//! Synthetic corpus: every show has one best page, one or two related pages
//! that carry title evidence but not the show's name, and a few unrelated
//! pages sharing a title token.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Output;

use chrono::NaiveDate;
use fanlink_cli::labels::LabeledPair;
use fanlink_core::epg::{normalize_title, EpgRecord};
use fanlink_core::evaluation::GoldLabel;
use fanlink_core::features::ChannelDirectory;
use fanlink_core::pages::{FanPage, PageStore};
use fanlink_core::ShowKey;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fanlink(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_fanlink"))
        .args(args)
        .output()
        .expect("run fanlink")
}

pub fn fanlink_in(out: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    fanlink(&all)
}

pub struct Synthetic {
    pub records: Vec<EpgRecord>,
    pub store: PageStore,
    pub directory: ChannelDirectory,
    pub labels: Vec<LabeledPair>,
}

const CHANNELS: [(&str, &str); 4] = [
    ("Channel North", "north.tv"),
    ("Channel South", "south.tv"),
    ("Film Four", "filmfour.com"),
    ("Arts One", "artsone.org"),
];
const CATEGORIES: [&str; 3] = ["Drama", "Documentary", "Comedy"];
const COMMON: [&str; 6] = ["Tonight", "Live", "Story", "Files", "Journal", "Hour"];
const SYLLABLES: [&str; 8] = ["zor", "bla", "quin", "vex", "tam", "rud", "mol", "kep"];
const PEOPLE: [&str; 8] = ["Ada", "Bruno", "Celia", "Dev", "Edith", "Farouk", "Greta", "Hugo"];
const PLACES: [&str; 6] = ["Lisbon", "Oslo", "Kyoto", "Quito", "Tunis", "Perth"];
const OTHER_CATEGORIES: [&str; 4] = ["Restaurant", "Musician/band", "Local business", "Tv show"];

fn unique_word(i: usize) -> String {
    let w = format!("{}{}{}", SYLLABLES[i % 8], SYLLABLES[(i / 8) % 8], SYLLABLES[(i * 3 + 1) % 8]);
    let mut c = w.chars();
    let first = c.next().unwrap().to_ascii_uppercase();
    format!("{first}{}", c.as_str())
}

fn insert(store: &mut PageStore, page: FanPage) {
    store.insert(page).expect("synthetic page ids are unique");
}

pub fn corpus(n_shows: usize, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut store = PageStore::new();
    let mut labels = Vec::new();
    let mut page_no = 0usize;

    for i in 0..n_shows {
        let (channel, domain) = CHANNELS[i % CHANNELS.len()];
        let category = CATEGORIES[i % CATEGORIES.len()];
        let unique = unique_word(i);
        let title = format!("{unique} {}", COMMON[rng.gen_range(0..COMMON.len())]);
        let host = PEOPLE.choose(&mut rng).unwrap();
        let place = PLACES.choose(&mut rng).unwrap();
        let description = format!("Presenter {host} travels to {place}. A new episode.");
        let start = rng.gen_range(0..40) * 30;
        for rep in 0..rng.gen_range(1..=3) {
            records.push(EpgRecord {
                id: format!("r{i}-{rep}"),
                day: NaiveDate::from_ymd_opt(2013, 10, 1 + rep).unwrap(),
                title: title.clone(),
                category: category.into(),
                start,
                stop: (start + 60) % 1440,
                channel: channel.into(),
                subtitle: None,
                description: Some(description.clone()),
            });
        }
        let key = ShowKey {
            channel: channel.into(),
            norm_title: normalize_title(&title),
            duration_min: 60,
        };
        let mut label = |page_id: String, label: GoldLabel| {
            labels.push(LabeledPair { show_key: key.clone(), page_id, label });
        };
        let mut next_id = || {
            page_no += 1;
            format!("s{page_no:04}")
        };

        let id = next_id();
        insert(
            &mut store,
            FanPage {
                page_id: id.clone(),
                name: title.clone(),
                link: format!("www.facebook.com/{id}"),
                category: "Tv show".into(),
                likes: rng.gen_range(2000..20000),
                website: Some(format!("www.{domain}/{}", unique.to_lowercase())),
                talking_about: rng.gen_range(100..2000),
                about: Some(format!("{title} on {channel}, with {host}.")),
                site_text: Some(format!("{title}. Watch on {channel}.")),
            },
        );
        label(id, GoldLabel::Best);

        let related_names = [
            format!("{title} Fans"),
            format!("We love {unique}"),
            format!("{unique} Appreciation Society"),
        ];
        let n_related = rng.gen_range(1..=2);
        for name in related_names.choose_multiple(&mut rng, n_related) {
            let id = next_id();
            insert(
                &mut store,
                FanPage {
                    page_id: id.clone(),
                    name: name.clone(),
                    link: format!("www.facebook.com/{id}"),
                    category: "Community".into(),
                    likes: rng.gen_range(5..60),
                    website: None,
                    talking_about: rng.gen_range(0..5),
                    about: Some(format!("For everyone who followed {host} to {place}.")),
                    site_text: Some(format!("Our favourite show is {title}!")),
                },
            );
            label(id, GoldLabel::Related);
        }

        for u in 0..rng.gen_range(2..=3) {
            let id = next_id();
            let stranger = PEOPLE.choose(&mut rng).unwrap();
            let name = if u == 0 {
                format!("{unique} {}", ["Bistro", "Records", "Garage"].choose(&mut rng).unwrap())
            } else {
                format!("{} {}", title.split(' ').nth(1).unwrap(), PLACES.choose(&mut rng).unwrap())
            };
            insert(
                &mut store,
                FanPage {
                    page_id: id.clone(),
                    name,
                    link: format!("www.facebook.com/{id}"),
                    category: OTHER_CATEGORIES.choose(&mut rng).unwrap().to_string(),
                    likes: rng.gen_range(0..30000),
                    website: Some(format!("www.example{u}.com")),
                    talking_about: rng.gen_range(0..3000),
                    about: Some(format!("Run by {stranger} since 2009.")),
                    site_text: Some("Opening hours and contact details.".into()),
                },
            );
            label(id, GoldLabel::Unrelated);
        }
    }

    let channels = CHANNELS
        .iter()
        .map(|(c, d)| (c.to_string(), vec![d.to_string()]))
        .collect();
    let categories = CATEGORIES
        .iter()
        .map(|c| (c.to_string(), vec!["Tv show".to_string()]))
        .collect();
    Synthetic {
        records,
        store,
        directory: ChannelDirectory { channels, categories },
        labels,
    }
}
