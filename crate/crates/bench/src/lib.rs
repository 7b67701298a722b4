//! Seeded inputs for the benchmarks.

use fanlink_core::learners::Dataset;
use fanlink_core::pages::{FanPage, PageStore};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 16] = [
    "news", "live", "britain", "above", "cute", "tonight", "story", "files",
    "world", "cup", "kitchen", "nights", "wild", "planet", "top", "gear",
];

pub fn page_store(n: usize, seed: u64) -> PageStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = PageStore::new();
    for i in 0..n {
        let len = rng.gen_range(1..=4);
        let name: Vec<&str> = (0..len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
        store
            .insert(FanPage {
                page_id: format!("p{i}"),
                name: name.join(" "),
                link: format!("www.facebook.com/p{i}"),
                category: "Tv show".into(),
                likes: rng.gen_range(0..100_000),
                website: None,
                talking_about: rng.gen_range(0..5_000),
                about: None,
                site_text: None,
            })
            .expect("generated ids are unique");
    }
    store
}

pub fn titles(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(1..=4);
            (0..len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ")
        })
        .collect()
}

/// Feature rows in `[0, 1]` with a noisy linear label.
pub fn dataset(rows: usize, arity: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..arity).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let mut y: Vec<bool> = x
        .iter()
        .map(|r| r.iter().take(3).sum::<f64>() + rng.gen_range(-0.3..0.3) > 1.5)
        .collect();
    y[0] = true;
    y[1] = false;
    Dataset::new(x, y).expect("rows share one arity")
}
