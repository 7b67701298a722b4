use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, LearnerSpec, Model, ModelKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub mtry: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 50,
            max_depth: 6,
            mtry: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Fraction of positive training rows that reached this leaf.
    Leaf { fraction: f64 },
}

/// Binary tree stored as a node arena rooted at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(fraction: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { fraction }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { fraction } => return fraction,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Bootstrap row indices for each tree, plus the seed each tree uses for
/// its feature sampling.
pub fn bootstrap_plan(n_rows: usize, n_trees: usize, seed: u64) -> Vec<(Vec<usize>, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_trees)
        .map(|_| {
            let rows = (0..n_rows).map(|_| rng.gen_range(0..n_rows)).collect();
            (rows, rng.gen::<u64>())
        })
        .collect()
}

/// Rows never drawn into any tree's bootstrap sample.
pub fn out_of_bag_rows(n_rows: usize, plan: &[(Vec<usize>, u64)]) -> Vec<usize> {
    let mut seen = vec![false; n_rows];
    for (rows, _) in plan {
        for &r in rows {
            seen[r] = true;
        }
    }
    (0..n_rows).filter(|&r| !seen[r]).collect()
}

/// Rows out of bag for at least one tree.
pub fn rows_with_oob_tree(n_rows: usize, plan: &[(Vec<usize>, u64)]) -> Vec<usize> {
    (0..n_rows)
        .filter(|r| plan.iter().any(|(rows, _)| !rows.contains(r)))
        .collect()
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct Grower<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [bool],
    max_depth: usize,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct BestSplit {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

impl Grower<'_> {
    fn grow(&mut self, members: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        let pos = members.iter().filter(|&&i| self.labels[i]).count();
        let fraction = pos as f64 / members.len() as f64;
        self.nodes.push(Node::Leaf { fraction });

        if depth >= self.max_depth || pos == 0 || pos == members.len() || members.len() < 2 {
            return at;
        }
        let Some(best) = self.best_split(&members, pos) else {
            return at;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = members
            .into_iter()
            .partition(|&i| self.rows[i][best.feature] <= best.threshold);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        at
    }

    /// Lowest weighted Gini over `mtry` sampled features; ties keep the
    /// earlier feature in sampled order, then the lower threshold. Returns
    /// `None` unless the split strictly lowers impurity.
    fn best_split(&mut self, members: &[usize], pos: usize) -> Option<BestSplit> {
        let n = members.len();
        let arity = self.rows[members[0]].len();
        let parent = gini(pos, n);
        let mut best: Option<BestSplit> = None;
        for feature in sample(&mut self.rng, arity, self.mtry.min(arity)).into_iter() {
            let mut values: Vec<(f64, bool)> = members
                .iter()
                .map(|&i| (self.rows[i][feature], self.labels[i]))
                .collect();
            values.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += usize::from(values[k - 1].1);
                if values[k - 1].0 == values[k].0 {
                    continue;
                }
                let impurity = (k as f64 * gini(left_pos, k)
                    + (n - k) as f64 * gini(pos - left_pos, n - k))
                    / n as f64;
                let better = match &best {
                    None => true,
                    Some(b) => impurity.partial_cmp(&b.impurity) == Some(Ordering::Less),
                };
                if better {
                    best = Some(BestSplit {
                        impurity,
                        feature,
                        threshold: (values[k - 1].0 + values[k].0) / 2.0,
                    });
                }
            }
        }
        best.filter(|b| b.impurity < parent - 1e-12)
    }
}

/// Trains a forest. Rows are put in a canonical order first, so the result
/// does not depend on the order rows were supplied in.
pub fn train_random_forest(data: &Dataset, hp: &ForestParams) -> Result<Model> {
    data.require_trainable(false)?;
    if hp.n_trees == 0 || hp.mtry == 0 {
        return Err(Error::InvalidArgument("n_trees and mtry must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| {
        data.rows()[a]
            .iter()
            .zip(&data.rows()[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
            .then(data.labels()[a].cmp(&data.labels()[b]))
    });
    let canon = data.subset(&order);

    let trees = bootstrap_plan(canon.len(), hp.n_trees, hp.seed)
        .into_iter()
        .map(|(members, tree_seed)| {
            let mut grower = Grower {
                rows: canon.rows(),
                labels: canon.labels(),
                max_depth: hp.max_depth,
                mtry: hp.mtry,
                rng: ChaCha8Rng::seed_from_u64(tree_seed),
                nodes: Vec::new(),
            };
            grower.grow(members, 0);
            Tree { nodes: grower.nodes }
        })
        .collect();

    Ok(Model {
        kind: ModelKind::RandomForest,
        arity: data.arity(),
        threshold: 0.5,
        seed: hp.seed,
        hyperparameters: LearnerSpec::RandomForest(hp.clone()),
        standardization: None,
        weights: Vec::new(),
        bias: 0.0,
        trees,
    })
}
